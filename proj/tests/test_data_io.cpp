#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "support.hpp"
#include "uma/attack_sim.hpp"
#include "uma/data_io.hpp"
#include "uma/error.hpp"

using namespace uma;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uma_test_" + name + "_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

ParsedRatings parse(const std::string& text, RatingFormat f = RatingFormat::Tab) {
  std::istringstream in(text);
  return parse_ratings(in, f);
}

DecompositionResult small_result(std::uint64_t seed, SolverConfig* cfg_out, ObservationMask* mask_out) {
  GroundTruthParams p;
  p.m = 20;
  p.n = 15;
  p.rank = 2;
  p.sigma = 0.05;
  p.density = 0.6;
  p.seed = seed;
  const auto t = generate_ground_truth(p);
  auto cfg = default_config(20, 15);
  cfg.max_iters = 30;
  cfg.record_ergodic = true;
  *cfg_out = cfg;
  *mask_out = t.mask;
  return solve(observe(t.ground, t.mask, false), t.mask, cfg);
}

}  // namespace

TEST_CASE("parse tab and double-colon records") {
  const auto a = parse("1\t2\t5\t881250949\n");
  REQUIRE(a.records.size() == 1);
  CHECK(a.records[0] == RatingRecord{"1", "2", 5.0, 881250949});

  const auto b = parse("7::9::1::978300760\n", RatingFormat::DoubleColon);
  REQUIRE(b.records.size() == 1);
  CHECK(b.records[0].user_id == "7");
  CHECK(b.records[0].rating == 1.0);

  const auto c = parse("userId,movieId,rating,timestamp\n1,31,2.5,1260759144\n", RatingFormat::CsvHeader);
  REQUIRE(c.records.size() == 1);
  CHECK(c.records[0].rating == 2.5);

  const auto d = parse("3\t4\t2\n");
  REQUIRE(d.records.size() == 1);
  CHECK_FALSE(d.records[0].timestamp.has_value());

  CHECK(parse_rating_format("tab") == RatingFormat::Tab);
  CHECK(parse_rating_format("colon") == RatingFormat::DoubleColon);
  CHECK_THROWS_AS(parse_rating_format("xml"), ParameterError);
}

TEST_CASE("parse: blank lines, empty input and the malformed-line budget") {
  CHECK(parse("").records.empty());
  CHECK(parse("\n\n1\t1\t3\t0\n\n").records.size() == 1);

  std::string ok;
  for (int i = 0; i < 2000; ++i) ok += std::to_string(i) + "\t1\t3\t0\n";
  const auto two = parse(ok + "garbage\n");
  CHECK(two.records.size() == 2000);
  CHECK(two.malformed_lines == std::vector<std::size_t>{2001});
  CHECK_THROWS_AS(parse(ok + "x\ny\nz\n"), FormatError);
  CHECK_THROWS_AS(parse("1\t2\tnan\t0\n"), FormatError);
  CHECK_THROWS_AS(parse("1\t2\n"), FormatError);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_ratings("/nonexistent/u.data", RatingFormat::Tab), IoError);
}

TEST_CASE("centering and indexing") {
  const auto parsed = parse("10\t5\t5\t0\n20\t5\t1\t0\n10\t6\t3\t0\n");
  const auto rm = build_matrix(parsed.records);
  CHECK(rm.matrix.rows() == 2);
  CHECK(rm.matrix.cols() == 2);
  CHECK(rm.user_ids == std::vector<std::string>{"10", "20"});
  CHECK(rm.item_ids == std::vector<std::string>{"5", "6"});
  CHECK(rm.matrix(0, 0) == 2.0);
  CHECK(rm.matrix(1, 0) == -2.0);
  CHECK(rm.matrix(0, 1) == 0.0);
  CHECK(rm.mask.contains(0, 1));
  CHECK_FALSE(rm.mask.contains(1, 1));
  CHECK(rm.matrix(1, 1) == 0.0);
  CHECK(rm.mask.count() == 3);
}

TEST_CASE("duplicates and range errors") {
  const auto dup = build_matrix(parse("1\t1\t2\t0\n1\t1\t4\t0\n").records);
  CHECK(dup.matrix(0, 0) == 1.0);
  CHECK(dup.duplicates == 1);

  try {
    build_matrix(parse("1\t1\t3\t0\n4\t8\t6\t0\n").records);
    FAIL("expected RangeError");
  } catch (const RangeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("4") != std::string::npos);
    CHECK(msg.find("8") != std::string::npos);
  }
  CHECK_THROWS_AS(build_matrix({}), DomainError);
}

TEST_CASE("fixed index maps make the matrix independent of record order") {
  std::mt19937_64 rng(3);
  std::vector<RatingRecord> records;
  for (int u = 1; u <= 12; ++u)
    for (int i = 1; i <= 9; ++i)
      if ((u * 7 + i * 3) % 4 != 0)
        records.push_back({std::to_string(u), std::to_string(i), double(1 + (u + i) % 5), 0});
  std::vector<std::string> users, items;
  for (int u = 1; u <= 12; ++u) users.push_back(std::to_string(u));
  for (int i = 1; i <= 9; ++i) items.push_back(std::to_string(i));
  const auto a = build_matrix(records, users, items);
  std::shuffle(records.begin(), records.end(), rng);
  const auto b = build_matrix(records, users, items);
  CHECK(a.matrix == b.matrix);
  CHECK(a.mask == b.mask);

  records.push_back({"99", "1", 3.0, 0});
  CHECK_THROWS_AS(build_matrix(records, users, items), DomainError);
}

TEST_CASE("write then read ratings recovers the centered matrix") {
  const auto dir = scratch_dir("ratings");
  GroundTruthParams p;
  p.m = 25;
  p.n = 18;
  p.rank = 2;
  p.sigma = 0.4;
  p.density = 0.5;
  p.seed = 6;
  const auto t = generate_ground_truth(p);
  const auto m = observe(t.ground, t.mask, true);
  write_ratings(dir / "u.data", m, t.mask);
  const auto parsed = load_ratings(dir / "u.data", RatingFormat::Tab);
  CHECK(parsed.records.size() == t.mask.count());
  CHECK(parsed.malformed_lines.empty());
  std::vector<std::string> users, items;
  for (int i = 1; i <= 25; ++i) users.push_back(std::to_string(i));
  for (int j = 1; j <= 18; ++j) items.push_back(std::to_string(j));
  const auto rm = build_matrix(parsed.records, users, items);
  CHECK(rm.matrix == m);
  CHECK(rm.mask == t.mask);
  fs::remove_all(dir);
}

TEST_CASE("labels csv round trip") {
  const auto dir = scratch_dir("labels");
  write_labels(dir / "labels.csv", {"a", "b", "attacker-1"}, {0, 1, 1});
  const auto back = read_labels(dir / "labels.csv");
  REQUIRE(back.size() == 3);
  CHECK(back[2].first == "attacker-1");
  CHECK(back[2].second == 1);
  CHECK(back[0].second == 0);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  SolverConfig cfg;
  ObservationMask mask;
  const auto r = small_result(2, &cfg, &mask);
  const std::string bytes = encode_checkpoint(r, cfg, mask);
  CHECK(bytes.substr(0, 4) == "UMA1");
  const auto back = decode_checkpoint(bytes);
  CHECK(back.result.x == r.x);
  CHECK(back.result.y == r.y);
  CHECK(back.result.z == r.z);
  CHECK(back.result.lambda == r.lambda);
  CHECK(back.result.diagnostics == r.diagnostics);
  CHECK(back.result.converged == r.converged);
  CHECK(back.result.iterations_used == r.iterations_used);
  CHECK(back.config == cfg);
  CHECK(back.mask == mask);
  CHECK(encode_checkpoint(back.result, back.config, back.mask) == bytes);

  const auto dir = scratch_dir("ckpt");
  save_result(dir / "c.uma1", r, cfg, mask);
  CHECK(read_file(dir / "c.uma1") == bytes);
  CHECK(load_result(dir / "c.uma1").result.y == r.y);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint corruption") {
  SolverConfig cfg;
  ObservationMask mask;
  const auto r = small_result(3, &cfg, &mask);
  const std::string bytes = encode_checkpoint(r, cfg, mask);

  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), IntegrityError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), IntegrityError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), IntegrityError);

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK_THROWS_AS(decode_checkpoint(flipped), IntegrityError);

  std::string version = bytes;
  version[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(version), VersionError);

  CHECK_THROWS_AS(decode_checkpoint("PK\x03\x04 not ours"), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(""), FormatError);
  CHECK_THROWS_AS(load_result("/nonexistent/c.uma1"), IoError);
}

TEST_CASE("zero decomposition survives a round trip") {
  DecompositionResult r;
  r.x = DenseMatrix(3, 4);
  r.y = DenseMatrix(3, 4);
  r.z = DenseMatrix(3, 4);
  r.lambda = DenseMatrix(3, 4);
  const auto cfg = default_config(3, 4);
  const auto back = decode_checkpoint(encode_checkpoint(r, cfg, ObservationMask::full(3, 4)));
  CHECK(back.result.x == DenseMatrix(3, 4));
  CHECK(back.result.iterations_used == 0);
}

TEST_CASE("atomic writes replace whole files") {
  const auto dir = scratch_dir("atomic");
  write_file_atomic(dir / "f", "first");
  write_file_atomic(dir / "f", "second");
  CHECK(read_file(dir / "f") == "second");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "f", "x"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("fnv1a64 and format_double") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02e23}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::nan("")) == "nan");
}
