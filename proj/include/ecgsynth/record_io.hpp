#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ecgsynth/record.hpp"

namespace ecgsynth {

// Parses either a WFDB header (format 16 signals only) or the JSON sidecar
// written next to canonical CSV records. Throws MalformedHeader or
// UnsupportedFormat.
RecordHeader parse_header(std::string_view text);

// Decodes a payload described by `header`: little-endian, sample-interleaved
// 16-bit counts for format 16, or CSV text for CSV headers. Counts map to mV
// as (count - baseline) / gain.
MultiLeadRecord read_record(const RecordHeader& header, std::string_view payload);

// Reads a canonical CSV without a sidecar; fs is inferred from the time column
// (at least two rows are required).
MultiLeadRecord read_csv_record(std::string_view text, std::string name = "csv");

// Sample-aligned sub-record over [t0, t1) seconds relative to the record start.
// An empty lead list keeps every lead.
MultiLeadRecord slice_record(const MultiLeadRecord& record, double t0, double t1,
                             const std::vector<LeadId>& leads = {});

// Band-limited (windowed-sinc) interpolation for rational rate ratios, linear
// interpolation otherwise. Output length is floor(n * target_fs / fs).
MultiLeadRecord resample_record(const MultiLeadRecord& record, double target_fs);
std::vector<double> resample_signal(std::span<const double> signal, double fs, double target_fs);

void write_record_csv(const MultiLeadRecord& record, std::ostream& out);
void write_record_csv(const MultiLeadRecord& record, const std::filesystem::path& path);

// JSON sidecar describing a CSV record (the header read back by parse_header).
std::string header_json(const MultiLeadRecord& record);

// Writes <dir>/<name>.hea and <dir>/<name>.dat in format 16 with the given gain.
void write_record_wfdb(const MultiLeadRecord& record, const std::filesystem::path& dir,
                       double gain = 1000.0);

// Loads a record from a path: `.hea` (format 16 with its `.dat`), `.json`
// sidecar (with the CSV of the same stem), or a bare `.csv`.
MultiLeadRecord load_record(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace ecgsynth
