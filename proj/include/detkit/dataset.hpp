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

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace detkit::dataset {

/// Ordered, unique class names for a detection corpus.
class ClassTaxonomy {
public:
    ClassTaxonomy() = default;
    explicit ClassTaxonomy(std::vector<std::string> names);

    /// The kitchen knife-safety taxonomy this toolkit ships with.
    static ClassTaxonomy knife_safety();

    /// One class name per line; blank lines ignored.
    static ClassTaxonomy parse(const std::string& text);
    static ClassTaxonomy load(const std::string& path);

    int size() const noexcept { return static_cast<int>(names_.size()); }
    const std::string& name(int class_id) const { return names_.at(class_id); }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
};

/// One object annotation in YOLO label convention.
struct LabelRecord {
    int class_id = 0;
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool operator==(const LabelRecord&) const = default;
};

struct LabelParseError : std::runtime_error {
    LabelParseError(int line, const std::string& msg)
        : std::runtime_error("label line " + std::to_string(line) + ": " + msg),
          line(line) {}
    int line;
};

/// Parses "class cx cy w h" lines. Throws LabelParseError on malformed
/// lines or out-of-range coordinates.
std::vector<LabelRecord> parse_label_file(const std::string& text);

/// Canonical 6-decimal form; parse_label_file(write_label_file(r)) == r.
std::string write_label_file(const std::vector<LabelRecord>& records);

struct ManifestEntry {
    std::string image_path;
    std::string label_path;
    std::string split;  // empty until split_dataset assigns one

    bool operator==(const ManifestEntry&) const = default;
};

struct FrameManifest {
    std::vector<ManifestEntry> entries;
};

/// Manifest grammar: one entry per line, tab-separated
/// "image_path<TAB>label_path[<TAB>split]"; '#' starts a comment line.
FrameManifest parse_manifest(const std::string& text);
FrameManifest load_manifest(const std::string& path);
std::string write_manifest(const FrameManifest& manifest);

/// Deterministically tags every entry with a split. Sizes are the rounded
/// ratio shares; the remainder goes to the first split. Default names are
/// train/val/test, then split3, split4, ...
FrameManifest split_dataset(const FrameManifest& manifest,
                            const std::vector<double>& ratios,
                            std::uint64_t seed,
                            std::vector<std::string> names = {});

struct DatasetStats {
    std::vector<long long> per_class_instances;
    std::map<std::string, long long> images_per_split;
    std::map<std::pair<int, int>, long long> resolution_histogram;  // (w, h)
    long long total_images = 0;
    long long total_instances = 0;
};

struct Violation {
    std::string path;
    int line = 0;  // 0 when the violation is not tied to a line
    std::string message;
};

struct ValidationReport {
    DatasetStats stats;
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Scans the whole corpus, collecting every violation instead of failing
/// fast. Violations come back sorted by (path, line).
ValidationReport validate_dataset(const FrameManifest& manifest,
                                  const ClassTaxonomy& taxonomy);

/// Stats as "metric,key,value" CSV rows.
std::string stats_to_csv(const DatasetStats& stats,
                         const ClassTaxonomy& taxonomy);

/// Human-readable stats table.
std::string stats_to_table(const DatasetStats& stats,
                           const ClassTaxonomy& taxonomy);

}  // namespace detkit::dataset
