#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uma/dense_matrix.hpp"
#include "uma/evaluation.hpp"
#include "uma/solver.hpp"

namespace uma {

enum class RatingFormat {
  Tab,          // "user\titem\trating\ttimestamp" (MovieLens 100K u.data)
  DoubleColon,  // "user::item::rating::timestamp" (MovieLens 1M)
  CsvHeader,    // "userId,movieId,rating,timestamp" with a header line
};
// Accepts "tab", "colon" and "csv".
RatingFormat parse_rating_format(std::string_view name);

struct RatingRecord {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct ParsedRatings {
  std::vector<RatingRecord> records;
  std::vector<std::size_t> malformed_lines;  // 1-based
};

// Blank lines are ignored. Throws FormatError when more than 0.1% of the
// nonblank lines are malformed; fewer are skipped and listed.
ParsedRatings parse_ratings(std::istream& in, RatingFormat format);
// Throws IoError when the file cannot be read.
ParsedRatings load_ratings(const std::filesystem::path& path, RatingFormat format);

struct RatingMatrix {
  DenseMatrix matrix;  // rating - center on the mask, exactly 0 elsewhere
  ObservationMask mask;
  std::vector<std::string> user_ids;  // row -> id
  std::vector<std::string> item_ids;  // column -> id
  std::unordered_map<std::string, std::size_t> user_index;
  std::unordered_map<std::string, std::size_t> item_index;
  double center = 3.0;
  double bound = 2.0;
  std::size_t duplicates = 0;  // records overwritten by a later duplicate
};

// Users and items indexed in first-appearance order; the last duplicate wins.
// Throws RangeError naming the record if rating - center leaves [-bound, bound].
RatingMatrix build_matrix(const std::vector<RatingRecord>& records, double center = 3.0,
                          double bound = 2.0);
// Same with externally supplied index order; unknown ids throw DomainError.
RatingMatrix build_matrix(const std::vector<RatingRecord>& records,
                          const std::vector<std::string>& user_ids,
                          const std::vector<std::string>& item_ids, double center = 3.0,
                          double bound = 2.0);

// Writes observed cells as u.data lines with ids row+1 / col+1, rating
// value + center and timestamp 0.
void write_ratings(const std::filesystem::path& path, const DenseMatrix& values,
                   const ObservationMask& mask, double center = 3.0);

// "user,label" CSV.
void write_labels(const std::filesystem::path& path, const std::vector<std::string>& user_ids,
                  const Labels& labels);
std::vector<std::pair<std::string, std::uint8_t>> read_labels(const std::filesystem::path& path);

struct Checkpoint {
  DecompositionResult result;
  SolverConfig config;
  ObservationMask mask;
};

// "UMA1" container: magic, version, payload, FNV-1a 64 checksum of all
// preceding bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::string encode_checkpoint(const DecompositionResult& result, const SolverConfig& config,
                              const ObservationMask& mask);
// Throws FormatError for a foreign file, VersionError for another container
// version and IntegrityError for truncation or a checksum mismatch.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_result(const std::filesystem::path& path, const DecompositionResult& result,
                 const SolverConfig& config, const ObservationMask& mask);
Checkpoint load_result(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace uma
