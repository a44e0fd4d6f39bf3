#include "doctest.h"

#include "facelight/config.hpp"
#include "facelight/errors.hpp"
#include "test_support.hpp"

using namespace facelight;
namespace ft = facelight::test;

TEST_CASE("config: file parsing, comments and typed values") {
  ft::TempDir tmp;
  auto path = tmp / "f.cfg";
  ft::write_text(path,
                 "# commented line\n"
                 "percentiles = 2, 10, 90, 98\n"
                 "calibration.group = CM   # trailing comment\n"
                 "calibration.target_fmr = 1e-4\n"
                 "support.min_impostor = 500000\n"
                 "window.width = 30\n"
                 "window.lo = 100\n"
                 "embeddings.normalize = false\n"
                 "score.bins = 100\n"
                 "impostor.cross_group = true\n"
                 "threads = 3\n");
  auto config = load_config(path);
  CHECK(config.percentiles == std::array<double, 4>{2, 10, 90, 98});
  CHECK(config.calibration_group == "CM");
  CHECK(config.target_fmr == 1e-4);
  CHECK(config.min_impostor_support == 500000);
  CHECK(config.window_width == 30.0);
  CHECK(config.window_lo == 100.0);
  CHECK_FALSE(config.normalize_embeddings);
  CHECK(config.score_bins == 100);
  CHECK(config.cross_group);
  CHECK(config.threads == 3);

  auto snap = config.snapshot();
  CHECK(snap.at("calibration.group") == "CM");
  CHECK(snap.at("percentiles") == "2,10,90,98");
}

TEST_CASE("config: rejected entries") {
  Config config;
  CHECK_THROWS_AS(apply_config_entry(config, "no.such.key", "1"), ValidationError);
  CHECK_THROWS_AS(apply_config_entry(config, "calibration.target_fmr", "abc"),
                  ValidationError);
  CHECK_THROWS_AS(apply_config_entry(config, "percentiles", "5,15,85"),
                  ValidationError);
  CHECK_THROWS_AS(apply_config_entry(config, "support.min_impostor", "-2"),
                  ValidationError);
  CHECK_THROWS_AS(apply_config_entry(config, "embeddings.normalize", "maybe"),
                  ValidationError);
  CHECK_THROWS_AS(apply_config_entry(config, "score.bins", "0"), ValidationError);
  CHECK_THROWS_AS(apply_config_entry(config, "label.900", "skin"), ValidationError);

  ft::TempDir tmp;
  auto bad = tmp / "bad.cfg";
  ft::write_text(bad, "calibration.group CM\n");  // missing '='
  CHECK_THROWS_AS(load_config(bad), ValidationError);
}

TEST_CASE("config: the first label.* key replaces the default scheme") {
  Config config;
  CHECK(config.labels.names.size() == 19);
  apply_config_entry(config, "label.0", "background");
  CHECK(config.labels.names.size() == 1);
  apply_config_entry(config, "label.3", "skin");
  apply_config_entry(config, "label.7", "nose");
  CHECK(config.labels.names.size() == 3);
  CHECK(config.labels.names.at(3) == "skin");
  CHECK(config.labels.ids_named("nose") == std::set<std::uint8_t>{7});
}
