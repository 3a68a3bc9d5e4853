#include "uma/data_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "uma/error.hpp"

namespace uma {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'U', 'M', 'A', '1'};

std::vector<std::string_view> split(std::string_view line, RatingFormat format) {
  std::vector<std::string_view> fields;
  const std::string_view sep = format == RatingFormat::Tab           ? "\t"
                               : format == RatingFormat::DoubleColon ? "::"
                                                                     : ",";
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + sep.size();
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::optional<RatingRecord> parse_line(std::string_view line, RatingFormat format) {
  const auto fields = split(line, format);
  if (fields.size() < 3 || fields.size() > 4) return std::nullopt;
  RatingRecord r;
  r.user_id = std::string(trim(fields[0]));
  r.item_id = std::string(trim(fields[1]));
  if (r.user_id.empty() || r.item_id.empty()) return std::nullopt;
  if (!parse_number(trim(fields[2]), r.rating) || !std::isfinite(r.rating)) return std::nullopt;
  if (fields.size() == 4) {
    std::int64_t ts = 0;
    if (!parse_number(trim(fields[3]), ts)) return std::nullopt;
    r.timestamp = ts;
  }
  return r;
}

RatingMatrix assemble(const std::vector<RatingRecord>& records, RatingMatrix rm) {
  const std::size_t m = rm.user_ids.size();
  const std::size_t n = rm.item_ids.size();
  rm.matrix = DenseMatrix(m, n);
  std::vector<std::uint8_t> bitmap(m * n, 0);
  for (std::size_t k = 0; k < records.size(); ++k) {
    const RatingRecord& r = records[k];
    const double v = r.rating - rm.center;
    if (!(v >= -rm.bound && v <= rm.bound))
      throw RangeError("record " + std::to_string(k + 1) + " (user " + r.user_id + ", item " +
                       r.item_id + ", rating " + format_double(r.rating) + ") leaves [-" +
                       format_double(rm.bound) + ", " + format_double(rm.bound) + "] after centering");
    const std::size_t i = rm.user_index.at(r.user_id);
    const std::size_t j = rm.item_index.at(r.item_id);
    if (bitmap[i * n + j]) ++rm.duplicates;
    bitmap[i * n + j] = 1;
    rm.matrix(i, j) = v;
  }
  rm.mask = ObservationMask::from_bitmap(m, n, std::move(bitmap));
  return rm;
}

void check_scale(double center, double bound) {
  if (!std::isfinite(center)) throw ParameterError("build_matrix: center must be finite");
  if (!(bound > 0.0 && std::isfinite(bound))) throw ParameterError("build_matrix: bound must be > 0");
}

class Writer {
 public:
  template <class T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void put_doubles(std::span<const double> v) {
    put<std::uint64_t>(v.size());
    bytes_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void put_matrix(const DenseMatrix& m) {
    put<std::uint64_t>(m.rows());
    put<std::uint64_t>(m.cols());
    bytes_.append(reinterpret_cast<const char*>(m.values().data()), m.size() * sizeof(double));
  }
  void put_raw(const void* data, std::size_t size) {
    bytes_.append(static_cast<const char*>(data), size);
  }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <class T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  std::vector<double> get_doubles() {
    const std::size_t count = checked_count(get<std::uint64_t>(), sizeof(double));
    std::vector<double> v(count);
    std::memcpy(v.data(), take(count * sizeof(double)), count * sizeof(double));
    return v;
  }
  DenseMatrix get_matrix() {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    if (cols != 0 && rows > remaining() / cols) throw IntegrityError("checkpoint: matrix shape overruns file");
    std::vector<double> v(checked_count(rows * cols, sizeof(double)));
    std::memcpy(v.data(), take(v.size() * sizeof(double)), v.size() * sizeof(double));
    try {
      return DenseMatrix(rows, cols, std::move(v));
    } catch (const Error& e) {
      throw IntegrityError(std::string("checkpoint: invalid matrix: ") + e.what());
    }
  }
  const char* take(std::size_t size) {
    if (size > remaining()) throw IntegrityError("checkpoint: truncated payload");
    const char* p = bytes_.data() + pos_;
    pos_ += size;
    return p;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::size_t checked_count(std::uint64_t count, std::size_t width) {
    if (count > remaining() / width) throw IntegrityError("checkpoint: length field overruns file");
    return static_cast<std::size_t>(count);
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

RatingFormat parse_rating_format(std::string_view name) {
  if (name == "tab") return RatingFormat::Tab;
  if (name == "colon") return RatingFormat::DoubleColon;
  if (name == "csv") return RatingFormat::CsvHeader;
  throw ParameterError("unknown rating format '" + std::string(name) + "' (tab, colon, csv)");
}

ParsedRatings parse_ratings(std::istream& in, RatingFormat format) {
  ParsedRatings out;
  std::string line;
  std::size_t number = 0;
  std::size_t nonblank = 0;
  bool header_pending = format == RatingFormat::CsvHeader;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    ++nonblank;
    if (auto r = parse_line(line, format)) out.records.push_back(std::move(*r));
    else out.malformed_lines.push_back(number);
  }
  if (in.bad()) throw IoError("read error while parsing ratings");
  if (static_cast<double>(out.malformed_lines.size()) > 0.001 * static_cast<double>(nonblank))
    throw FormatError(std::to_string(out.malformed_lines.size()) + " of " + std::to_string(nonblank) +
                      " lines malformed, first at line " + std::to_string(out.malformed_lines.front()));
  return out;
}

ParsedRatings load_ratings(const std::filesystem::path& path, RatingFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_ratings(in, format);
}

RatingMatrix build_matrix(const std::vector<RatingRecord>& records, double center, double bound) {
  check_scale(center, bound);
  if (records.empty()) throw DomainError("build_matrix: no records");
  RatingMatrix rm;
  rm.center = center;
  rm.bound = bound;
  for (const RatingRecord& r : records) {
    if (rm.user_index.emplace(r.user_id, rm.user_ids.size()).second) rm.user_ids.push_back(r.user_id);
    if (rm.item_index.emplace(r.item_id, rm.item_ids.size()).second) rm.item_ids.push_back(r.item_id);
  }
  return assemble(records, std::move(rm));
}

RatingMatrix build_matrix(const std::vector<RatingRecord>& records,
                          const std::vector<std::string>& user_ids,
                          const std::vector<std::string>& item_ids, double center, double bound) {
  check_scale(center, bound);
  if (records.empty()) throw DomainError("build_matrix: no records");
  RatingMatrix rm;
  rm.center = center;
  rm.bound = bound;
  rm.user_ids = user_ids;
  rm.item_ids = item_ids;
  for (std::size_t i = 0; i < user_ids.size(); ++i)
    if (!rm.user_index.emplace(user_ids[i], i).second)
      throw DomainError("build_matrix: duplicate user id " + user_ids[i]);
  for (std::size_t j = 0; j < item_ids.size(); ++j)
    if (!rm.item_index.emplace(item_ids[j], j).second)
      throw DomainError("build_matrix: duplicate item id " + item_ids[j]);
  for (const RatingRecord& r : records)
    if (!rm.user_index.contains(r.user_id) || !rm.item_index.contains(r.item_id))
      throw DomainError("build_matrix: record (" + r.user_id + ", " + r.item_id +
                        ") not in the supplied index");
  return assemble(records, std::move(rm));
}

void write_ratings(const std::filesystem::path& path, const DenseMatrix& values,
                   const ObservationMask& mask, double center) {
  if (!mask.matches(values)) throw DimensionError("write_ratings: mask does not match matrix");
  std::string out;
  for (const Cell& c : mask.cells())
    out += std::to_string(c.row + 1) + '\t' + std::to_string(c.col + 1) + '\t' +
           format_double(values(c.row, c.col) + center) + "\t0\n";
  write_file_atomic(path, out);
}

void write_labels(const std::filesystem::path& path, const std::vector<std::string>& user_ids,
                  const Labels& labels) {
  if (user_ids.size() != labels.size()) throw DimensionError("write_labels: ids and labels differ in length");
  std::string out = "user,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    out += user_ids[i] + ',' + (labels[i] ? '1' : '0') + '\n';
  write_file_atomic(path, out);
}

std::vector<std::pair<std::string, std::uint8_t>> read_labels(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::pair<std::string, std::uint8_t>> out;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view s = trim(line);
    if (s.empty() || (number == 1 && s == "user,label")) continue;
    const std::size_t comma = s.rfind(',');
    const std::string_view flag = comma == std::string_view::npos ? "" : trim(s.substr(comma + 1));
    if (flag != "0" && flag != "1")
      throw FormatError(path.string() + ":" + std::to_string(number) + ": expected 'user,0|1'");
    out.emplace_back(std::string(trim(s.substr(0, comma))), flag == "1" ? 1 : 0);
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_checkpoint(const DecompositionResult& result, const SolverConfig& config,
                              const ObservationMask& mask) {
  Writer w;
  w.put_raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);

  for (double v : {config.tau, config.alpha, config.kappa, config.beta, config.delta,
                   config.tol_residual, config.tol_change})
    w.put(v);
  w.put<std::uint64_t>(config.max_iters);
  w.put<std::uint8_t>(config.record_ergodic);

  w.put<std::uint8_t>(result.converged);
  w.put<std::uint64_t>(result.iterations_used);
  const Diagnostics& d = result.diagnostics;
  w.put_doubles(d.residual_history);
  w.put_doubles(d.change_history);
  w.put_doubles(d.objective_history);
  w.put_doubles(d.ergodic_residual_history);
  w.put<std::uint8_t>(d.ergodic_recorded);
  w.put<std::uint8_t>(d.beta_convergence_ok);
  w.put<std::uint8_t>(d.beta_rate_ok);
  w.put(d.data_norm);

  for (const DenseMatrix* m : {&result.x, &result.y, &result.z, &result.lambda}) w.put_matrix(*m);

  w.put<std::uint64_t>(mask.rows());
  w.put<std::uint64_t>(mask.cols());
  w.put_raw(mask.bitmap().data(), mask.bitmap().size());

  w.put(fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError("not a UMA1 checkpoint");
  if (bytes.size() < sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t))
    throw IntegrityError("checkpoint: truncated header");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + sizeof kMagic, sizeof version);
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  const std::string_view body = bytes.substr(0, bytes.size() - sizeof(std::uint64_t));
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (fnv1a64(body) != stored) throw IntegrityError("checkpoint: checksum mismatch");

  Reader r(body.substr(sizeof kMagic + sizeof version));
  Checkpoint cp;
  SolverConfig& c = cp.config;
  for (double* v : {&c.tau, &c.alpha, &c.kappa, &c.beta, &c.delta, &c.tol_residual, &c.tol_change})
    *v = r.get<double>();
  c.max_iters = r.get<std::uint64_t>();
  c.record_ergodic = r.get<std::uint8_t>() != 0;

  DecompositionResult& res = cp.result;
  res.converged = r.get<std::uint8_t>() != 0;
  res.iterations_used = r.get<std::uint64_t>();
  Diagnostics& d = res.diagnostics;
  d.residual_history = r.get_doubles();
  d.change_history = r.get_doubles();
  d.objective_history = r.get_doubles();
  d.ergodic_residual_history = r.get_doubles();
  d.ergodic_recorded = r.get<std::uint8_t>() != 0;
  d.beta_convergence_ok = r.get<std::uint8_t>() != 0;
  d.beta_rate_ok = r.get<std::uint8_t>() != 0;
  d.data_norm = r.get<double>();

  for (DenseMatrix* m : {&res.x, &res.y, &res.z, &res.lambda}) *m = r.get_matrix();

  const auto rows = r.get<std::uint64_t>();
  const auto cols = r.get<std::uint64_t>();
  if (cols != 0 && rows > r.remaining() / cols) throw IntegrityError("checkpoint: mask overruns file");
  const std::size_t cells = rows * cols;
  const char* raw = r.take(cells);
  if (r.remaining() != 0) throw IntegrityError("checkpoint: trailing bytes");
  try {
    if (cells > 0) cp.mask = ObservationMask::from_bitmap(rows, cols, std::vector<std::uint8_t>(raw, raw + cells));
  } catch (const Error& e) {
    throw IntegrityError(std::string("checkpoint: invalid mask: ") + e.what());
  }
  return cp;
}

void save_result(const std::filesystem::path& path, const DecompositionResult& result,
                 const SolverConfig& config, const ObservationMask& mask) {
  write_file_atomic(path, encode_checkpoint(result, config, mask));
}

Checkpoint load_result(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read error on " + path.string());
  return std::move(ss).str();
}

}  // namespace uma
