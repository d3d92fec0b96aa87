#include "ecgsynth/record_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "ecgsynth/error.hpp"

namespace ecgsynth {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' ||
                        s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Parses the numeric prefix of `s`; returns the number of characters used.
std::size_t parse_number_prefix(std::string_view s, double& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc()) return 0;
  return static_cast<std::size_t>(ptr - s.data());
}

bool parse_double_exact(std::string_view s, double& value) {
  s = trim(s);
  if (s.empty()) return false;
  return parse_number_prefix(s, value) == s.size();
}

bool parse_int_exact(std::string_view s, long long& value) {
  s = trim(s);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedHeader, what);
}

RecordHeader parse_json_header(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    malformed(std::string("invalid JSON sidecar: ") + e.what());
  }
  try {
    if (!doc.is_object()) malformed("JSON sidecar must be an object");
    const std::string format = doc.value("format", std::string("csv"));
    if (format != "csv") {
      throw Error(ErrorCode::UnsupportedFormat, "sidecar storage format '" + format + "'");
    }
    RecordHeader header;
    header.name = doc.value("name", std::string("record"));
    if (!doc.contains("fs") || !doc["fs"].is_number()) malformed("sidecar lacks fs");
    header.fs = doc["fs"].get<double>();
    const auto samples = doc.value("samples", 0LL);
    if (samples < 0) malformed("negative sample count");
    header.samples_per_lead = static_cast<std::size_t>(samples);
    if (doc.contains("range_mv") && doc["range_mv"].is_number()) {
      header.range_mv = doc["range_mv"].get<double>();
    }
    if (!doc.contains("leads") || !doc["leads"].is_array()) malformed("sidecar lacks leads");
    for (const auto& name : doc["leads"]) {
      if (!name.is_string()) malformed("lead names must be strings");
      const auto id = parse_lead(name.get<std::string>());
      if (!id) malformed("unknown lead '" + name.get<std::string>() + "'");
      header.leads.push_back(LeadDescriptor{*id, 1.0, 0, StorageFormat::Csv});
    }
    validate_header(header);
    return header;
  } catch (const json::exception& e) {
    malformed(std::string("invalid JSON sidecar: ") + e.what());
  }
}

struct SignalSpec {
  std::string file;
  LeadDescriptor desc;
  std::optional<int> adc_resolution;
};

SignalSpec parse_signal_line(std::string_view line) {
  const auto tokens = split_ws(line);
  if (tokens.size() < 2) malformed("signal line needs file name and format");
  SignalSpec spec;
  spec.file = std::string(tokens[0]);

  // Format token: digits, optionally followed by x<spf>, :<skew>, +<offset>.
  std::string_view fmt = tokens[1];
  std::size_t digits = 0;
  while (digits < fmt.size() && std::isdigit(static_cast<unsigned char>(fmt[digits]))) ++digits;
  if (digits == 0) malformed("signal format is not numeric");
  long long format = 0;
  if (!parse_int_exact(fmt.substr(0, digits), format)) malformed("bad signal format");
  if (format != 16) {
    throw Error(ErrorCode::UnsupportedFormat,
                "signal format " + std::string(fmt.substr(0, digits)) + " (only 16 is supported)");
  }
  std::string_view rest = fmt.substr(digits);
  while (!rest.empty()) {
    const char tag = rest.front();
    rest.remove_prefix(1);
    std::size_t n = 0;
    while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
    long long v = 0;
    if (n == 0 || !parse_int_exact(rest.substr(0, n), v)) malformed("bad format modifier");
    rest.remove_prefix(n);
    if ((tag == 'x' && v != 1) || (tag == ':' && v != 0) || (tag == '+' && v != 0)) {
      throw Error(ErrorCode::UnsupportedFormat, "frames, skew and byte offsets are not supported");
    }
    if (tag != 'x' && tag != ':' && tag != '+') malformed("bad format modifier");
  }

  spec.desc.format = StorageFormat::Format16;
  spec.desc.gain = 200.0;
  bool explicit_baseline = false;
  if (tokens.size() >= 3) {
    std::string_view g = tokens[2];
    double gain = 0.0;
    std::size_t used = parse_number_prefix(g, gain);
    if (used == 0) malformed("bad ADC gain");
    g.remove_prefix(used);
    if (!g.empty() && g.front() == '(') {
      const auto close = g.find(')');
      if (close == std::string_view::npos) malformed("unterminated baseline");
      long long base = 0;
      if (!parse_int_exact(g.substr(1, close - 1), base)) malformed("bad baseline");
      spec.desc.baseline = static_cast<int>(base);
      explicit_baseline = true;
      g.remove_prefix(close + 1);
    }
    if (!g.empty()) {
      if (g.front() != '/') malformed("bad gain suffix");
      const std::string_view units = g.substr(1);
      if (units == "uV") gain *= 1000.0;
      else if (units == "V") gain /= 1000.0;
    }
    spec.desc.gain = gain;
  }
  if (tokens.size() >= 4) {
    long long res = 0;
    if (!parse_int_exact(tokens[3], res) || res < 0 || res > 32) malformed("bad ADC resolution");
    if (res > 0) spec.adc_resolution = static_cast<int>(res);
  }
  if (tokens.size() >= 5 && !explicit_baseline) {
    long long zero = 0;
    if (!parse_int_exact(tokens[4], zero)) malformed("bad ADC zero");
    spec.desc.baseline = static_cast<int>(zero);
  }
  if (tokens.size() < 9) malformed("signal line lacks a lead description");
  // The description is everything after the block size field.
  const std::string_view desc_start = tokens[8];
  const std::string_view description =
      trim(line.substr(static_cast<std::size_t>(desc_start.data() - line.data())));
  const auto id = parse_lead(description);
  if (!id) malformed("unknown lead description '" + std::string(description) + "'");
  spec.desc.lead = *id;
  return spec;
}

RecordHeader parse_wfdb_header(std::string_view text) {
  std::vector<std::string_view> lines;
  for (auto line : split_lines(text)) {
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.push_back(line);
  }
  if (lines.empty()) malformed("empty header");

  const auto record = split_ws(lines.front());
  if (record.size() < 2) malformed("record line needs a name and a signal count");
  RecordHeader header;
  if (record[0].find('/') != std::string_view::npos) {
    throw Error(ErrorCode::UnsupportedFormat, "multi-segment records are not supported");
  }
  header.name = std::string(record[0]);
  long long nsig = 0;
  if (!parse_int_exact(record[1], nsig) || nsig < 0) malformed("bad signal count");
  if (nsig == 0) malformed("record declares 0 leads");
  header.fs = 250.0;
  if (record.size() >= 3) {
    double fs = 0.0;
    if (parse_number_prefix(record[2], fs) == 0) malformed("bad sampling frequency");
    header.fs = fs;
  }
  if (record.size() >= 4) {
    long long n = 0;
    if (!parse_int_exact(record[3], n) || n < 0) malformed("bad sample count");
    header.samples_per_lead = static_cast<std::size_t>(n);
  }
  if (lines.size() - 1 < static_cast<std::size_t>(nsig)) {
    malformed("header declares " + std::to_string(nsig) + " signals but describes " +
              std::to_string(lines.size() - 1));
  }

  std::string file;
  double range = 0.0;
  bool have_range = true;
  for (long long s = 0; s < nsig; ++s) {
    auto spec = parse_signal_line(lines[static_cast<std::size_t>(s) + 1]);
    if (s == 0) file = spec.file;
    if (spec.file != file) {
      throw Error(ErrorCode::UnsupportedFormat, "signals stored in more than one file");
    }
    if (spec.adc_resolution && spec.desc.gain != 0.0) {
      const double full = std::ldexp(1.0, *spec.adc_resolution - 1);
      range = std::max(range, (full + std::abs(spec.desc.baseline)) / std::abs(spec.desc.gain));
    } else {
      have_range = false;
    }
    header.leads.push_back(spec.desc);
  }
  if (have_range) header.range_mv = range;
  validate_header(header);
  return header;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // per lead
};

CsvTable parse_csv_table(std::string_view text) {
  auto lines = split_lines(text);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) malformed("empty CSV");
  std::string_view first = lines.front();
  if (first.size() >= 3 && static_cast<unsigned char>(first[0]) == 0xEF) first.remove_prefix(3);
  const auto head = split_csv(first);
  if (head.size() < 2 || head[0] != "time_s") malformed("CSV must start with time_s and leads");
  CsvTable table;
  for (std::size_t c = 1; c < head.size(); ++c) table.columns.emplace_back(head[c]);
  table.values.resize(table.columns.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv(lines[r]);
    if (cells.size() != head.size()) {
      malformed("CSV row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                " fields, expected " + std::to_string(head.size()));
    }
    double t = 0.0;
    if (!parse_double_exact(cells[0], t)) malformed("bad time value in row " + std::to_string(r + 1));
    table.times.push_back(t);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_double_exact(cells[c], v) || !std::isfinite(v)) {
        malformed("bad sample value in row " + std::to_string(r + 1));
      }
      table.values[c - 1].push_back(v);
    }
  }
  return table;
}

MultiLeadRecord read_format16(const RecordHeader& header, std::string_view payload) {
  const std::size_t nsig = header.lead_count();
  const std::size_t frame = 2 * nsig;
  std::size_t n = header.samples_per_lead;
  if (n == 0) n = payload.size() / frame;
  if (payload.size() < n * frame) {
    throw Error(ErrorCode::TruncatedPayload,
                "payload has " + std::to_string(payload.size()) + " bytes, expected " +
                    std::to_string(n * frame));
  }
  for (const auto& d : header.leads) {
    if (d.gain == 0.0) throw Error(ErrorCode::GainZero, "lead " + std::string(lead_name(d.lead)));
  }
  std::vector<std::vector<double>> samples(nsig, std::vector<double>(n));
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t s = 0; s < nsig; ++s) {
      const std::size_t off = t * frame + 2 * s;
      const auto raw = static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
      const auto count = static_cast<std::int16_t>(raw);
      samples[s][t] = (static_cast<double>(count) - header.leads[s].baseline) / header.leads[s].gain;
    }
  }
  RecordHeader h = header;
  return MultiLeadRecord(std::move(h), std::move(samples));
}

MultiLeadRecord read_csv_payload(const RecordHeader& header, std::string_view payload) {
  const CsvTable table = parse_csv_table(payload);
  if (table.columns.size() != header.lead_count()) {
    malformed("CSV lead columns do not match the header");
  }
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    const auto id = parse_lead(table.columns[c]);
    if (!id || *id != header.leads[c].lead) malformed("CSV column '" + table.columns[c] +
                                                      "' does not match the header");
  }
  if (table.times.size() < header.samples_per_lead) {
    throw Error(ErrorCode::TruncatedPayload, "CSV has fewer rows than the header declares");
  }
  std::vector<std::vector<double>> samples = table.values;
  const std::size_t n = header.samples_per_lead == 0 ? table.times.size() : header.samples_per_lead;
  for (auto& lead : samples) lead.resize(n);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& d = header.leads[k];
    if (d.gain == 0.0) throw Error(ErrorCode::GainZero, "lead " + std::string(lead_name(d.lead)));
    if (d.gain != 1.0 || d.baseline != 0) {
      for (double& v : samples[k]) v = (v - d.baseline) / d.gain;
    }
  }
  const double start = table.times.empty() ? 0.0 : table.times.front();
  RecordHeader h = header;
  return MultiLeadRecord(std::move(h), std::move(samples), start);
}

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

// Odd (point) reflection about the end samples keeps local linear trends.
double extended_sample(std::span<const double> x, long long k) {
  const auto n = static_cast<long long>(x.size());
  if (k >= 0 && k < n) return x[static_cast<std::size_t>(k)];
  if (k < 0) {
    const long long m = std::min(-k, n - 1);
    return 2.0 * x.front() - x[static_cast<std::size_t>(m)];
  }
  const long long m = std::min(k - (n - 1), n - 1);
  return 2.0 * x.back() - x[static_cast<std::size_t>(n - 1 - m)];
}

bool near_integer(double v) { return std::abs(v - std::round(v)) < 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

RecordHeader parse_header(std::string_view text) {
  const auto t = trim(text);
  if (!t.empty() && t.front() == '{') return parse_json_header(t);
  return parse_wfdb_header(text);
}

MultiLeadRecord read_record(const RecordHeader& header, std::string_view payload) {
  validate_header(header);
  const StorageFormat format = header.leads.front().format;
  for (const auto& d : header.leads) {
    if (d.format != format) throw Error(ErrorCode::UnsupportedFormat, "mixed storage formats");
  }
  if (format == StorageFormat::Format16) return read_format16(header, payload);
  return read_csv_payload(header, payload);
}

MultiLeadRecord read_csv_record(std::string_view text, std::string name) {
  const CsvTable table = parse_csv_table(text);
  if (table.times.size() < 2) malformed("cannot infer fs from fewer than two CSV rows");
  const double span = table.times.back() - table.times.front();
  if (!(span > 0.0)) malformed("CSV time column is not increasing");
  double fs = static_cast<double>(table.times.size() - 1) / span;
  if (std::abs(fs - std::round(fs)) < 1e-6 * fs) fs = std::round(fs);
  RecordHeader header;
  header.name = std::move(name);
  header.fs = fs;
  header.samples_per_lead = table.times.size();
  for (const auto& c : table.columns) {
    const auto id = parse_lead(c);
    if (!id) malformed("unknown lead column '" + c + "'");
    header.leads.push_back(LeadDescriptor{*id, 1.0, 0, StorageFormat::Csv});
  }
  validate_header(header);
  return MultiLeadRecord(std::move(header), table.values, table.times.front());
}

MultiLeadRecord slice_record(const MultiLeadRecord& record, double t0, double t1,
                             const std::vector<LeadId>& leads) {
  const double fs = record.fs();
  const double duration = record.duration();
  const double eps = 1e-9 * std::max(1.0, duration);
  if (!(t0 >= -eps) || !(t1 > t0) || t1 > duration + eps) {
    throw Error(ErrorCode::OutOfRange, "slice [" + format_double(t0) + ", " + format_double(t1) +
                                           "] outside [0, " + format_double(duration) + "]");
  }
  const auto n = static_cast<long long>(record.size());
  const long long i0 = std::clamp<long long>(std::llround(t0 * fs), 0, n);
  const long long i1 = std::clamp<long long>(std::llround(t1 * fs), i0, n);

  std::vector<std::size_t> keep;
  if (leads.empty()) {
    for (std::size_t k = 0; k < record.lead_count(); ++k) keep.push_back(k);
  } else {
    for (LeadId id : leads) {
      if (!record.has_lead(id)) {
        throw Error(ErrorCode::UnknownLead,
                    "record has no lead " + std::string(lead_name(id)));
      }
    }
    for (std::size_t k = 0; k < record.lead_count(); ++k) {
      if (std::find(leads.begin(), leads.end(), record.lead_at(k)) != leads.end()) keep.push_back(k);
    }
  }

  RecordHeader header = record.header();
  header.leads.clear();
  std::vector<std::vector<double>> samples;
  for (std::size_t k : keep) {
    header.leads.push_back(record.header().leads[k]);
    const auto src = record.lead(k);
    samples.emplace_back(src.begin() + i0, src.begin() + i1);
  }
  return MultiLeadRecord(std::move(header), std::move(samples),
                         record.start_time() + static_cast<double>(i0) / fs);
}

std::vector<double> resample_signal(std::span<const double> x, double fs, double target_fs) {
  if (!(fs > 0.0) || !(target_fs > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sampling rates must be positive");
  }
  const std::size_t n = x.size();
  const auto n_out = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * target_fs / fs + 1e-9));
  if (fs == target_fs) return std::vector<double>(x.begin(), x.end());
  std::vector<double> y(n_out);
  if (n == 0) return y;
  if (n == 1) {
    std::fill(y.begin(), y.end(), x[0]);
    return y;
  }

  bool rational = false;
  long long p = 0;  // output step numerator: position = k * q / p
  long long q = 0;
  if (near_integer(fs) && near_integer(target_fs)) {
    const long long a = std::llround(target_fs);
    const long long b = std::llround(fs);
    const long long g = std::gcd(a, b);
    p = a / g;
    q = b / g;
    rational = std::max(p, q) <= 4096;
  }

  if (!rational) {
    const double step = fs / target_fs;
    for (std::size_t k = 0; k < n_out; ++k) {
      const double pos = static_cast<double>(k) * step;
      const auto i = std::min(static_cast<std::size_t>(pos), n - 2);
      const double frac = pos - static_cast<double>(i);
      y[k] = x[i] + frac * (x[i + 1] - x[i]);
    }
    return y;
  }

  constexpr double kBeta = 12.0;
  constexpr double kHalfWidth = 32.0;  // input samples at unit cutoff
  const double cutoff = std::min(1.0, static_cast<double>(p) / static_cast<double>(q));
  const double half = kHalfWidth / cutoff;
  const double i0_beta = bessel_i0(kBeta);
  for (std::size_t k = 0; k < n_out; ++k) {
    const long long num = static_cast<long long>(k) * q;
    const long long base = num / p;
    const long long rem = num % p;
    if (rem == 0 && cutoff == 1.0) {
      y[k] = x[static_cast<std::size_t>(base)];
      continue;
    }
    const double pos = static_cast<double>(base) + static_cast<double>(rem) / static_cast<double>(p);
    const auto lo = static_cast<long long>(std::ceil(pos - half));
    const auto hi = static_cast<long long>(std::floor(pos + half));
    double acc = 0.0;
    double wsum = 0.0;
    for (long long i = lo; i <= hi; ++i) {
      const double d = static_cast<double>(i) - pos;
      const double r = d / half;
      if (std::abs(r) >= 1.0) continue;
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = d == 0.0 ? 1.0 : std::sin(arg) / arg;
      const double w = bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      const double h = cutoff * sinc * w;
      acc += h * extended_sample(x, i);
      wsum += h;
    }
    y[k] = acc / wsum;
  }
  return y;
}

MultiLeadRecord resample_record(const MultiLeadRecord& record, double target_fs) {
  if (!(target_fs > 0.0)) throw Error(ErrorCode::InvalidConfig, "target fs must be positive");
  if (target_fs == record.fs()) return record;
  std::vector<std::vector<double>> samples;
  for (std::size_t k = 0; k < record.lead_count(); ++k) {
    samples.push_back(resample_signal(record.lead(k), record.fs(), target_fs));
  }
  RecordHeader header = record.header();
  header.fs = target_fs;
  return MultiLeadRecord(std::move(header), std::move(samples), record.start_time());
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

void write_record_csv(const MultiLeadRecord& record, std::ostream& out) {
  out << "time_s";
  for (LeadId id : record.leads()) out << ',' << lead_name(id);
  out << '\n';
  const double fs = record.fs();
  for (std::size_t t = 0; t < record.size(); ++t) {
    out << format_double(record.start_time() + static_cast<double>(t) / fs);
    for (std::size_t k = 0; k < record.lead_count(); ++k) {
      out << ',' << format_double(record.lead(k)[t]);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing CSV");
}

void write_record_csv(const MultiLeadRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  write_record_csv(record, out);
}

std::string header_json(const MultiLeadRecord& record) {
  json doc;
  doc["format"] = "csv";
  doc["name"] = record.header().name;
  doc["fs"] = record.fs();
  doc["samples"] = record.size();
  doc["start_time_s"] = record.start_time();
  json leads = json::array();
  for (LeadId id : record.leads()) leads.push_back(std::string(lead_name(id)));
  doc["leads"] = leads;
  if (record.header().range_mv) doc["range_mv"] = *record.header().range_mv;
  return doc.dump(2) + "\n";
}

void write_record_wfdb(const MultiLeadRecord& record, const std::filesystem::path& dir,
                       double gain) {
  const std::string& name = record.header().name;
  std::ofstream hea(dir / (name + ".hea"), std::ios::binary);
  if (!hea) throw Error(ErrorCode::IoFailure, "cannot write header for " + name);
  hea << name << ' ' << record.lead_count() << ' ' << format_double(record.fs()) << ' '
      << record.size() << '\n';
  for (LeadId id : record.leads()) {
    hea << name << ".dat 16 " << format_double(gain) << "(0)/mV 16 0 0 0 0 " << lead_name(id)
        << '\n';
  }
  std::ofstream dat(dir / (name + ".dat"), std::ios::binary);
  if (!dat) throw Error(ErrorCode::IoFailure, "cannot write payload for " + name);
  std::vector<char> bytes(record.size() * record.lead_count() * 2);
  std::size_t off = 0;
  for (std::size_t t = 0; t < record.size(); ++t) {
    for (std::size_t k = 0; k < record.lead_count(); ++k) {
      const double c = std::clamp(std::round(record.lead(k)[t] * gain), -32768.0, 32767.0);
      const auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(c));
      bytes[off++] = static_cast<char>(v & 0xFF);
      bytes[off++] = static_cast<char>(v >> 8);
    }
  }
  dat.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!hea || !dat) throw Error(ErrorCode::IoFailure, "failed writing " + name);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

MultiLeadRecord load_record(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".hea") {
    const RecordHeader header = parse_header(read_text_file(path));
    auto dat = path;
    dat.replace_extension(".dat");
    return read_record(header, read_text_file(dat));
  }
  if (ext == ".json") {
    const RecordHeader header = parse_header(read_text_file(path));
    auto csv = path;
    csv.replace_extension(".csv");
    return read_record(header, read_text_file(csv));
  }
  if (ext == ".csv") {
    auto sidecar = path;
    sidecar.replace_extension(".json");
    if (std::filesystem::exists(sidecar)) {
      const RecordHeader header = parse_header(read_text_file(sidecar));
      return read_record(header, read_text_file(path));
    }
    return read_csv_record(read_text_file(path), path.stem().string());
  }
  throw Error(ErrorCode::UnsupportedFormat, "unrecognised record file " + path.string());
}

}  // namespace ecgsynth
