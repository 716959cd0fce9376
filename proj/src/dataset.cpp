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

#include "detkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "detkit/image.hpp"
#include "detkit/rng.hpp"

namespace detkit::dataset {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ClassTaxonomy::ClassTaxonomy(std::vector<std::string> names)
    : names_(std::move(names)) {
    std::set<std::string> unique(names_.begin(), names_.end());
    if (unique.size() != names_.size()) {
        throw std::invalid_argument("taxonomy: class names must be unique");
    }
}

ClassTaxonomy ClassTaxonomy::knife_safety() {
    return ClassTaxonomy({"cutting board", "hand", "vegetable", "knife",
                          "hazard 1 (curl finger)",
                          "hazard 2 (hand touching blade)"});
}

ClassTaxonomy ClassTaxonomy::parse(const std::string& text) {
    std::vector<std::string> names;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string name = trim(line);
        if (!name.empty()) {
            names.push_back(name);
        }
    }
    return ClassTaxonomy(std::move(names));
}

ClassTaxonomy ClassTaxonomy::load(const std::string& path) {
    return parse(read_text_file(path));
}

std::vector<LabelRecord> parse_label_file(const std::string& text) {
    std::vector<LabelRecord> records;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty()) continue;

        std::istringstream fields(line);
        LabelRecord rec;
        std::string extra;
        if (!(fields >> rec.class_id >> rec.cx >> rec.cy >> rec.w >> rec.h)) {
            throw LabelParseError(line_no,
                                  "expected 'class cx cy w h', got '" + line + "'");
        }
        if (fields >> extra) {
            throw LabelParseError(line_no, "trailing field '" + extra + "'");
        }
        if (rec.class_id < 0) {
            throw LabelParseError(line_no, "class id must be >= 0");
        }
        auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in01(rec.cx) || !in01(rec.cy) || !in01(rec.w) || !in01(rec.h)) {
            throw LabelParseError(line_no, "coordinates must be in [0, 1]");
        }
        if (rec.w <= 0.0 || rec.h <= 0.0) {
            throw LabelParseError(line_no, "box width and height must be > 0");
        }
        records.push_back(rec);
    }
    return records;
}

std::string write_label_file(const std::vector<LabelRecord>& records) {
    std::string out;
    char buf[128];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%d %.6f %.6f %.6f %.6f\n", r.class_id,
                      r.cx, r.cy, r.w, r.h);
        out += buf;
    }
    return out;
}

FrameManifest parse_manifest(const std::string& text) {
    FrameManifest manifest;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (trim(raw).empty() || trim(raw)[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = raw.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(raw.substr(start));
                break;
            }
            fields.push_back(raw.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty() ||
            fields[1].empty()) {
            throw std::runtime_error(
                "manifest line " + std::to_string(line_no) +
                ": expected 'image<TAB>label[<TAB>split]'");
        }
        ManifestEntry entry;
        entry.image_path = fields[0];
        entry.label_path = fields[1];
        if (fields.size() == 3) entry.split = fields[2];
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

FrameManifest load_manifest(const std::string& path) {
    FrameManifest manifest = parse_manifest(read_text_file(path));
    // Relative entries resolve against the manifest's own directory, so an
    // output tree stays usable from any working directory.
    const std::filesystem::path base =
        std::filesystem::path(path).parent_path();
    if (!base.empty()) {
        for (auto& entry : manifest.entries) {
            if (!std::filesystem::path(entry.image_path).is_absolute()) {
                entry.image_path = (base / entry.image_path).string();
            }
            if (!std::filesystem::path(entry.label_path).is_absolute()) {
                entry.label_path = (base / entry.label_path).string();
            }
        }
    }
    return manifest;
}

std::string write_manifest(const FrameManifest& manifest) {
    std::string out;
    for (const auto& e : manifest.entries) {
        out += e.image_path;
        out += '\t';
        out += e.label_path;
        if (!e.split.empty()) {
            out += '\t';
            out += e.split;
        }
        out += '\n';
    }
    return out;
}

FrameManifest split_dataset(const FrameManifest& manifest,
                            const std::vector<double>& ratios,
                            std::uint64_t seed,
                            std::vector<std::string> names) {
    if (manifest.entries.empty()) {
        throw std::invalid_argument("split_dataset: manifest is empty");
    }
    if (ratios.empty()) {
        throw std::invalid_argument("split_dataset: need at least one ratio");
    }
    double sum = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) {
            throw std::invalid_argument("split_dataset: ratios must be positive");
        }
        sum += r;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split_dataset: ratios must sum to 1");
    }

    static const char* kDefault[] = {"train", "val", "test"};
    while (names.size() < ratios.size()) {
        const std::size_t i = names.size();
        names.push_back(i < 3 ? kDefault[i] : "split" + std::to_string(i));
    }

    const std::size_t n = manifest.entries.size();

    // Rounded shares for every split after the first; remainder to the first.
    std::vector<std::size_t> sizes(ratios.size(), 0);
    std::size_t assigned = 0;
    for (std::size_t i = 1; i < ratios.size(); ++i) {
        sizes[i] = static_cast<std::size_t>(
            std::llround(ratios[i] * static_cast<double>(n)));
        assigned += sizes[i];
    }
    if (assigned > n) {
        throw std::invalid_argument(
            "split_dataset: rounded shares leave no room for the first split");
    }
    sizes[0] = n - assigned;

    // Deterministic Fisher-Yates shuffle of entry indices.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j =
            static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(i)));
        std::swap(order[i - 1], order[j]);
    }

    FrameManifest out = manifest;
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        for (std::size_t k = 0; k < sizes[s]; ++k) {
            out.entries[order[cursor++]].split = names[s];
        }
    }
    return out;
}

ValidationReport validate_dataset(const FrameManifest& manifest,
                                  const ClassTaxonomy& taxonomy) {
    ValidationReport report;
    report.stats.per_class_instances.assign(taxonomy.size(), 0);

    std::set<std::string> seen_images;
    for (const auto& entry : manifest.entries) {
        if (!seen_images.insert(entry.image_path).second) {
            report.violations.push_back(
                {entry.image_path, 0, "duplicate image path in manifest"});
        }
    }

    for (const auto& entry : manifest.entries) {
        bool image_ok = false;
        try {
            const ImageBuffer img = read_png(entry.image_path);
            report.stats.resolution_histogram[{img.width(), img.height()}]++;
            image_ok = true;
        } catch (const std::exception& e) {
            report.violations.push_back({entry.image_path, 0, e.what()});
        }

        try {
            const auto records = parse_label_file(read_text_file(entry.label_path));
            for (const auto& rec : records) {
                if (rec.class_id >= taxonomy.size()) {
                    report.violations.push_back(
                        {entry.label_path, 0,
                         "class id " + std::to_string(rec.class_id) +
                             " outside taxonomy of size " +
                             std::to_string(taxonomy.size())});
                    continue;
                }
                report.stats.per_class_instances[rec.class_id]++;
                report.stats.total_instances++;
            }
        } catch (const LabelParseError& e) {
            report.violations.push_back({entry.label_path, e.line, e.what()});
        } catch (const std::exception& e) {
            report.violations.push_back({entry.label_path, 0, e.what()});
        }

        if (image_ok) {
            report.stats.total_images++;
            report.stats.images_per_split[entry.split.empty() ? "(none)"
                                                              : entry.split]++;
        }
    }

    std::sort(report.violations.begin(), report.violations.end(),
              [](const Violation& a, const Violation& b) {
                  return std::tie(a.path, a.line) < std::tie(b.path, b.line);
              });
    return report;
}

std::string stats_to_csv(const DatasetStats& stats,
                         const ClassTaxonomy& taxonomy) {
    std::ostringstream out;
    out << "metric,key,value\n";
    for (int c = 0; c < taxonomy.size(); ++c) {
        out << "class_instances," << taxonomy.name(c) << ','
            << stats.per_class_instances[c] << '\n';
    }
    for (const auto& [split, count] : stats.images_per_split) {
        out << "images," << split << ',' << count << '\n';
    }
    for (const auto& [res, count] : stats.resolution_histogram) {
        out << "resolution," << res.first << 'x' << res.second << ',' << count
            << '\n';
    }
    out << "total,images," << stats.total_images << '\n';
    out << "total,instances," << stats.total_instances << '\n';
    return out.str();
}

std::string stats_to_table(const DatasetStats& stats,
                           const ClassTaxonomy& taxonomy) {
    std::ostringstream out;
    out << "class instances:\n";
    for (int c = 0; c < taxonomy.size(); ++c) {
        out << "  " << taxonomy.name(c) << ": " << stats.per_class_instances[c]
            << '\n';
    }
    out << "images per split:\n";
    if (stats.images_per_split.empty()) {
        out << "  (none)\n";
    }
    for (const auto& [split, count] : stats.images_per_split) {
        out << "  " << split << ": " << count << '\n';
    }
    out << "resolutions:\n";
    if (stats.resolution_histogram.empty()) {
        out << "  (none)\n";
    }
    for (const auto& [res, count] : stats.resolution_histogram) {
        out << "  " << res.first << 'x' << res.second << ": " << count << '\n';
    }
    out << "total images: " << stats.total_images << '\n';
    out << "total instances: " << stats.total_instances << '\n';
    return out.str();
}

}  // namespace detkit::dataset
