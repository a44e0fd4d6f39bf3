#include <fstream>

#include "doctest.h"

#include "facelight/audit.hpp"
#include "facelight/errors.hpp"
#include "facelight/image_io.hpp"
#include "facelight/synthetic.hpp"
#include "test_support.hpp"

using namespace facelight;
namespace ft = facelight::test;

namespace {

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.subjects_per_group = 14;
  cfg.images_per_subject = 6;
  cfg.dim = 24;
  cfg.group_means = {160, 166, 172, 178};
  cfg.group_sigmas = {38, 38, 38, 38};
  cfg.pixels_per_image = 512;
  return cfg;
}

AuditInputs inputs_from(const SynthDataset& data) {
  AuditInputs inputs;
  inputs.records = data.records;
  inputs.profiles = data.profiles;
  inputs.embeddings = data.embeddings;
  return inputs;
}

Config audit_config() {
  Config config;
  config.calibration_group = "G4";
  config.target_fmr = 5e-3;
  config.min_impostor_support = 500;
  config.min_genuine_window = 30;
  config.threads = 2;
  return config;
}

}  // namespace

TEST_CASE("run_audit: report structure and table consistency") {
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();

  auto report = run_audit(inputs, config);

  CHECK(report.groups == std::vector<std::string>{"G1", "G2", "G3", "G4"});
  // 15 unordered category pairs per group
  CHECK(report.fmr_table.size() == 4 * 15);
  for (const auto& group : report.groups) {
    std::size_t rows = 0;
    for (const auto& [key, cell] : report.fmr_table) {
      if (key.group == group) ++rows;
    }
    CHECK(rows == 15);
  }

  // every cell's fmr equals the recomputed ratio of its raw counts
  for (const auto& [key, cell] : report.fmr_table) {
    if (cell.pair_count == 0) {
      CHECK_FALSE(cell.fmr.has_value());
      CHECK(cell.low_support);
    } else {
      CHECK(*cell.fmr == doctest::Approx(double(cell.above_threshold) /
                                         double(cell.pair_count)).epsilon(1e-12));
    }
    CHECK(cell.low_support == (cell.pair_count < config.min_impostor_support));
    // the engine buckets agree with the table cells
    auto it = report.impostor_buckets.find(key);
    if (it != report.impostor_buckets.end()) {
      CHECK(it->second.pair_count == cell.pair_count);
      CHECK(it->second.above_threshold_count == cell.above_threshold);
    } else {
      CHECK(cell.pair_count == 0);
    }
  }

  CHECK(report.threshold.calibration_group == "G4");
  CHECK(report.threshold.achieved_fmr <= report.threshold.target_fmr);
  CHECK(report.bim_table.size() == 4 * 5);
  CHECK(report.fsb_stats.size() == 4);
  CHECK(report.scheme.source_count == data.records.size());
}

TEST_CASE("run_audit: input validation") {
  auto data = generate_synthetic(small_synth());
  auto config = audit_config();

  {
    auto inputs = inputs_from(data);
    inputs.embeddings.reset();
    CHECK_THROWS_WITH_AS(run_audit(inputs, config),
                         doctest::Contains("no score source"), ValidationError);
  }
  {
    auto inputs = inputs_from(data);
    inputs.scores = ScoreTable{};
    CHECK_THROWS_AS(run_audit(inputs, config), ValidationError);
  }
  {
    auto inputs = inputs_from(data);
    auto bad = config;
    bad.calibration_group = "NOPE";
    CHECK_THROWS_AS(run_audit(inputs, bad), ValidationError);
  }
  {
    auto inputs = inputs_from(data);
    inputs.profiles.pop_back();
    CHECK_THROWS_AS(run_audit(inputs, config), ValidationError);
  }
}

TEST_CASE("run_audit: declared group with no usable images is omitted with a warning") {
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();
  config.groups = {"G1", "G2", "G3", "G4", "G9"};

  auto report = run_audit(inputs, config);
  CHECK(report.groups == std::vector<std::string>{"G1", "G2", "G3", "G4"});
  bool warned = false;
  for (const auto& w : report.warnings) {
    if (w.find("G9") != std::string::npos) warned = true;
  }
  CHECK(warned);
}

TEST_CASE("run_audit: fixed threshold skips calibration") {
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();
  config.fixed_threshold = 0.5;
  config.calibration_group.clear();

  auto report = run_audit(inputs, config);
  CHECK(report.threshold.value == 0.5);
  CHECK(report.threshold.calibration_group.empty());
}

TEST_CASE("write_report: byte-identical across runs, including distributions") {
  ft::TempDir tmp;
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();

  auto r1 = run_audit(inputs, config);
  auto r2 = run_audit(inputs, config);
  write_report(r1, inputs, tmp / "run1");
  write_report(r2, inputs, tmp / "run2");

  for (const char* name : {"report.json", "report.txt", "fmr_table.csv",
                           "bim_table.csv", "sliding_table.csv"}) {
    CHECK(ft::read_bytes(tmp / ("run1/" + std::string(name))) ==
          ft::read_bytes(tmp / ("run2/" + std::string(name))));
  }
}

TEST_CASE("coverage_fraction: direct counts and partition property") {
  std::vector<ImageRecord> records;
  std::vector<std::optional<BrightnessProfile>> profiles;
  for (int i = 0; i < 10; ++i) {
    records.push_back(ft::make_record("i" + std::to_string(i), "s", "G"));
    profiles.push_back(ft::profile_at("i" + std::to_string(i), 10.0 * i));  // 0..90
  }
  auto all = coverage_fraction(profiles, records, 0.0, 100.0);
  CHECK(all.at("G") == doctest::Approx(1.0));
  auto half = coverage_fraction(profiles, records, 0.0, 50.0);
  CHECK(half.at("G") == doctest::Approx(0.5));

  // disjoint covering ranges partition the sample
  double total = 0.0;
  for (auto [lo, hi] : {std::pair{0.0, 25.0}, {25.0, 60.0}, {60.0, 100.0}}) {
    total += coverage_fraction(profiles, records, lo, hi).at("G");
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(coverage_fraction(profiles, records, 5.0, 5.0), ValidationError);
}

TEST_CASE("export_distributions: densities integrate to one") {
  ft::TempDir tmp;
  AuditReport report;
  PairKey key("G", ExposureCategory::M, ExposureCategory::M);

  PairStats single;
  single.score_histogram = ScoreHistogram(-1.0, 1.0, 50);
  single.add(0.37, 0.0);
  report.impostor_buckets[key] = single;

  PairStats uniform;
  uniform.score_histogram = ScoreHistogram(-1.0, 1.0, 50);
  for (int i = 0; i < 5000; ++i) uniform.add(-1.0 + 2.0 * (i + 0.5) / 5000.0, 0.0);
  report.genuine_buckets[key] = uniform;

  auto files = export_distributions(report, tmp / "d");
  REQUIRE(files.size() == 2);

  for (const auto& file : files) {
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    CHECK(header == "bin_low,bin_high,count,density");
    double integral = 0.0, lo, hi, density;
    std::uint64_t count, nonzero = 0;
    char comma;
    while (in >> lo >> comma >> hi >> comma >> count >> comma >> density) {
      integral += density * (hi - lo);
      if (count) ++nonzero;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
    if (file.string().find("impostor") != std::string::npos) {
      CHECK(nonzero == 1);  // a single score occupies one bin
    } else {
      CHECK(nonzero == 50);  // uniform scores occupy every bin
    }
  }
}

TEST_CASE("export_distributions: selections filter and unknown buckets error") {
  ft::TempDir tmp;
  AuditReport report;
  PairStats s;
  s.score_histogram = ScoreHistogram(-1.0, 1.0, 10);
  s.add(0.2, 0.0);
  report.impostor_buckets[PairKey("G", ExposureCategory::M, ExposureCategory::M)] = s;
  report.impostor_buckets[PairKey("G", ExposureCategory::SU, ExposureCategory::M)] = s;
  report.genuine_buckets[PairKey("G", ExposureCategory::M, ExposureCategory::M)] = s;

  DistributionSelection sel;
  sel.group = "G";
  sel.cat_a = sel.cat_b = ExposureCategory::M;
  sel.kind = PairKind::Impostor;
  auto files = export_distributions(report, tmp / "one", {sel});
  CHECK(files.size() == 1);

  DistributionSelection missing;
  missing.group = "NOPE";
  CHECK_THROWS_AS(export_distributions(report, tmp / "none", {missing}),
                  ValidationError);
}

TEST_CASE("target_range_search: single window is trivially the argmax") {
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();
  config.min_genuine_window = 1;

  auto windows = sliding_windows(60, 240, 180, 10);
  REQUIRE(windows.size() == 1);
  std::map<std::pair<std::string, std::string>, SlidingCell> table;
  TargetRangeResult result;
  target_range_search(inputs, config, windows, table, result);
  for (const auto& group : {"G1", "G2", "G3", "G4"}) {
    CHECK(result.argmax_by_dprime.at(group) == windows[0].label);
  }
  REQUIRE(result.consensus.has_value());
  CHECK(result.consensus->lo == 60.0);
  CHECK(result.consensus->hi == 240.0);
}

TEST_CASE("target_range_search: an unreachable support floor leaves consensus undefined") {
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();
  config.min_genuine_window = 1'000'000;

  auto windows = sliding_windows(100, 240, 40, 20);
  std::map<std::pair<std::string, std::string>, SlidingCell> table;
  TargetRangeResult result;
  target_range_search(inputs, config, windows, table, result);
  CHECK_FALSE(result.consensus.has_value());
  CHECK(result.argmax_by_dprime.empty());
  for (const auto& [key, cell] : table) CHECK(cell.low_support);
}

TEST_CASE("profiles csv round-trip through audit inputs") {
  ft::TempDir tmp;
  auto data = generate_synthetic(small_synth());

  AuditInputs writer;
  writer.records = data.records;
  writer.profiles = data.profiles;
  write_profiles_csv(tmp / "p.csv", writer.records, writer.profiles, std::nullopt);

  AuditInputs reader;
  reader.records = data.records;
  load_profiles_csv(reader, tmp / "p.csv");
  CHECK(reader.excluded.empty());
  for (std::size_t i = 0; i < reader.records.size(); ++i) {
    REQUIRE(reader.profiles[i].has_value());
    CHECK(reader.profiles[i]->fsb ==
          doctest::Approx(data.profiles[i]->fsb).epsilon(1e-12));
    CHECK(reader.profiles[i]->bim ==
          doctest::Approx(data.profiles[i]->bim).epsilon(1e-12));
  }

  // group disagreement between csv and manifest is an error
  auto tampered = data.records;
  tampered[0].group = "ZZ";
  AuditInputs bad;
  bad.records = tampered;
  CHECK_THROWS_AS(load_profiles_csv(bad, tmp / "p.csv"), ValidationError);
}

TEST_CASE("compute_profiles: image pipeline with exclusions and warnings") {
  ft::TempDir tmp;

  auto write_pair = [&](const std::string& id, std::uint8_t intensity,
                        const LabelMap& labels) {
    GrayImage img = ft::make_image(labels.width, labels.height, intensity);
    auto ip = tmp / (id + ".png");
    auto mp = tmp / (id + "_mask.png");
    write_gray_png(img, ip);
    GrayImage as_img;
    as_img.width = labels.width;
    as_img.height = labels.height;
    as_img.pixels = labels.labels;
    write_gray_png(as_img, mp);
    auto rec = ft::make_record(id, "s_" + id, "G");
    rec.image_path = ip.string();
    rec.mask_path = mp.string();
    return rec;
  };

  // skin with a nose row
  auto with_nose = ft::make_label_map(6, 6, 1);
  with_nose.labels[4 * 6 + 3] = 10;
  // skin only (warning case)
  auto no_nose = ft::make_label_map(6, 6, 1);
  // background only (excluded case)
  auto empty = ft::make_label_map(6, 6, 0);

  AuditInputs inputs;
  inputs.records = {write_pair("good", 120, with_nose),
                    write_pair("flat", 90, no_nose),
                    write_pair("none", 10, empty)};
  Config config;
  config.threads = 2;
  compute_profiles(inputs, config);

  REQUIRE(inputs.profiles.size() == 3);
  REQUIRE(inputs.profiles[0].has_value());
  CHECK(inputs.profiles[0]->fsb == 120.0);
  REQUIRE(inputs.profiles[1].has_value());
  CHECK(inputs.profiles[1]->fsb == 90.0);
  CHECK_FALSE(inputs.profiles[2].has_value());

  REQUIRE(inputs.excluded.size() == 1);
  CHECK(inputs.excluded[0].first == "none");
  bool warned = false;
  for (const auto& w : inputs.warnings) {
    if (w.find("flat") != std::string::npos && w.find("nose") != std::string::npos) {
      warned = true;
    }
  }
  CHECK(warned);

  // unreadable image files are hard errors, not exclusions
  auto broken = ft::make_record("broken", "s_b", "G");
  broken.image_path = (tmp / "missing.png").string();
  broken.mask_path = (tmp / "missing_mask.png").string();
  inputs.records.push_back(broken);
  CHECK_THROWS_AS(compute_profiles(inputs, config), ValidationError);
}

TEST_CASE("run_audit: per-group scheme mode fits one scheme per group") {
  auto data = generate_synthetic(small_synth());
  auto inputs = inputs_from(data);
  auto config = audit_config();
  config.per_group_scheme = true;

  auto report = run_audit(inputs, config);
  CHECK(report.per_group_schemes.size() == 4);
  for (const auto& [group, scheme] : report.per_group_schemes) {
    CHECK(scheme.b5 <= scheme.b15);
    CHECK(scheme.b15 <= scheme.b85);
    CHECK(scheme.b85 <= scheme.b95);
  }
}
