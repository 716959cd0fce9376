/********************************************************************************
* Copyright 2026 The detkit Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*    http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
********************************************************************************/

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace detkit::csv {

/// Quotes a field only when it contains a comma, quote, or newline.
inline std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out += ',';
        out += escape_field(fields[i]);
    }
    out += '\n';
    return out;
}

/// Parses CSV text into rows of fields, honoring quoted fields with
/// doubled-quote escapes. Throws on an unterminated quote.
inline std::vector<std::vector<std::string>> parse(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    const auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    const auto end_row = [&] {
        if (field_started || !row.empty() || !field.empty()) {
            end_field();
            rows.push_back(row);
            row.clear();
        }
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
            field_started = true;  // next field exists even if empty
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) {
        throw std::runtime_error("csv: unterminated quoted field");
    }
    end_row();
    return rows;
}

}  // namespace detkit::csv
