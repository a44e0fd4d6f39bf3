#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"

#include "facelight/brightness.hpp"
#include "facelight/synthetic.hpp"
#include "test_support.hpp"

using namespace facelight;
namespace ft = facelight::test;

namespace {

std::string binary(const char* env) {
  const char* v = std::getenv(env);
  REQUIRE_MESSAGE(v != nullptr, "test environment must set ", env);
  return v;
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

// Rendered fixture: real PNGs + label maps, small enough to stay fast.
struct RenderedFixture {
  ft::TempDir dir;
  std::filesystem::path manifest;
  SynthDataset data;

  RenderedFixture() {
    SynthConfig cfg;
    cfg.seed = 9;
    cfg.subjects_per_group = 6;
    cfg.images_per_subject = 4;
    cfg.dim = 16;
    cfg.pixels_per_image = 256;
    data = generate_synthetic(cfg);
    render_synthetic_images(data, dir.path());
    manifest = write_synthetic(data, dir.path());
  }
};

}  // namespace

TEST_CASE("cli: exit codes for usage, input and success paths") {
  const auto bin = binary("FACELIGHT_BIN");
  ft::TempDir tmp;

  CHECK(run(bin + " --help") == 0);
  CHECK(run(bin + " fsb --help") == 0);
  CHECK(run(bin) == 1);                       // missing subcommand
  CHECK(run(bin + " frobnicate") == 1);       // unknown subcommand
  CHECK(run(bin + " fsb --manifest m.csv --out o.csv --bogus-flag 1") == 1);
  CHECK(run(bin + " fsb --manifest " + (tmp / "absent.csv").string() + " --out " +
            (tmp / "o.csv").string()) == 2);

  auto dup = tmp / "dup.csv";
  ft::write_text(dup,
                 "image_id,subject_id,group,image_path,mask_path\n"
                 "x,s1,G,p,q\n"
                 "x,s2,G,p,q\n");
  CHECK(run(bin + " stats --manifest " + dup.string()) == 2);
}

TEST_CASE("cli: fsb computes profiles from rendered images") {
  const auto bin = binary("FACELIGHT_BIN");
  RenderedFixture fx;
  auto out = fx.dir / "fsb.csv";
  auto hist_dir = fx.dir / "hists";
  auto mask_dir = fx.dir / "masks";

  CHECK(run(bin + " fsb --manifest " + fx.manifest.string() + " --out " + out.string() +
            " --hist-dir " + hist_dir.string() + " --mask-dir " + mask_dir.string()) == 0);

  auto rows = read_profiles_csv(out);
  REQUIRE(rows.size() == fx.data.records.size());
  // flat renders: FSB equals the flat intensity, BIM is zero
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double expected = std::round(fx.data.profiles[i]->fsb);
    CHECK(rows[i].fsb == doctest::Approx(expected).epsilon(1e-12));
    CHECK(rows[i].bim == doctest::Approx(0.0));
    CHECK(rows[i].category.has_value());
  }
  CHECK(std::filesystem::exists(hist_dir / "hist_G1.csv"));
  CHECK(std::filesystem::exists(mask_dir /
                                ("mask_" + fx.data.records[0].image_id + ".png")));
}

TEST_CASE("cli: audit runs end-to-end and is byte-deterministic") {
  const auto bin = binary("FACELIGHT_BIN");
  RenderedFixture fx;

  const std::string common =
      bin + " audit --manifest " + fx.manifest.string() + " --embeddings " +
      (fx.dir / "embeddings.bin").string() + " --ids " +
      (fx.dir / "embeddings.ids").string() +
      " --calibration-group G4 --target-fmr 0.01 --min-support 100 --min-genuine 5"
      " --threads 2 --out ";
  CHECK(run(common + (fx.dir / "r1").string()) == 0);
  CHECK(run(common + (fx.dir / "r2").string()) == 0);

  CHECK(ft::read_bytes(fx.dir / "r1/report.json") ==
        ft::read_bytes(fx.dir / "r2/report.json"));
  CHECK(ft::read_bytes(fx.dir / "r1/fmr_table.csv") ==
        ft::read_bytes(fx.dir / "r2/fmr_table.csv"));
  CHECK(std::filesystem::exists(fx.dir / "r1/report.txt"));
  CHECK(std::filesystem::exists(fx.dir / "r1/bim_table.csv"));
  CHECK(std::filesystem::exists(fx.dir / "r1/sliding_table.csv"));
  CHECK(std::filesystem::exists(fx.dir / "r1/hist_G1.csv"));
}

TEST_CASE("cli: audit accepts cached profiles and score tables") {
  const auto bin = binary("FACELIGHT_BIN");
  ft::TempDir tmp;
  SynthConfig cfg;
  cfg.seed = 12;
  cfg.subjects_per_group = 6;
  cfg.images_per_subject = 4;
  cfg.dim = 16;
  cfg.pixels_per_image = 256;
  auto data = generate_synthetic(cfg);
  auto manifest = write_synthetic(data, tmp.path());

  CHECK(run(bin + " audit --manifest " + manifest.string() + " --profiles " +
            (tmp / "profiles.csv").string() + " --embeddings " +
            (tmp / "embeddings.bin").string() + " --ids " +
            (tmp / "embeddings.ids").string() +
            " --calibration-group G2 --target-fmr 0.02 --min-support 100"
            " --min-genuine 5 --out " + (tmp / "rep").string()) == 0);

  // no score source at all -> input error
  CHECK(run(bin + " audit --manifest " + manifest.string() + " --profiles " +
            (tmp / "profiles.csv").string() + " --calibration-group G2 --out " +
            (tmp / "rep2").string()) == 2);
}

TEST_CASE("cli: target-range honors the paper-style window flags") {
  const auto bin = binary("FACELIGHT_BIN");
  ft::TempDir tmp;
  SynthConfig cfg;
  cfg.seed = 13;
  cfg.subjects_per_group = 10;
  cfg.images_per_subject = 6;
  cfg.dim = 16;
  cfg.pixels_per_image = 256;
  auto data = generate_synthetic(cfg);
  auto manifest = write_synthetic(data, tmp.path());

  auto out = tmp / "sliding.csv";
  CHECK(run(bin + " target-range --manifest " + manifest.string() + " --profiles " +
            (tmp / "profiles.csv").string() + " --embeddings " +
            (tmp / "embeddings.bin").string() + " --ids " +
            (tmp / "embeddings.ids").string() +
            " --window 40 --step 5 --lo 145 --hi 220 --label-origin 6"
            " --min-genuine 3 --out " + out.string()) == 0);

  std::ifstream in(out);
  std::string header, line;
  std::getline(in, header);
  CHECK(header ==
        "group,label,lo,hi,image_count,avg_bim,genuine_pairs,impostor_pairs,"
        "d_prime,low_support");
  std::size_t rows = 0;
  bool saw_m6 = false;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",M6,145,185,") != std::string::npos) saw_m6 = true;
  }
  CHECK(rows == 4 * 8);  // 8 windows per group
  CHECK(saw_m6);
}

TEST_CASE("cli: export-dist selections") {
  const auto bin = binary("FACELIGHT_BIN");
  ft::TempDir tmp;
  SynthConfig cfg;
  cfg.seed = 14;
  cfg.subjects_per_group = 6;
  cfg.images_per_subject = 4;
  cfg.dim = 16;
  cfg.pixels_per_image = 256;
  auto data = generate_synthetic(cfg);
  auto manifest = write_synthetic(data, tmp.path());

  const std::string base = bin + " export-dist --manifest " + manifest.string() +
                           " --profiles " + (tmp / "profiles.csv").string() +
                           " --embeddings " + (tmp / "embeddings.bin").string() +
                           " --ids " + (tmp / "embeddings.ids").string();
  CHECK(run(base + " --select 'G1:M,M:impostor' --out " + (tmp / "d1").string()) == 0);
  CHECK(std::filesystem::exists(tmp / "d1/dist_G1_M-M_impostor.csv"));

  CHECK(run(base + " --select 'NOPE:M,M:impostor' --out " + (tmp / "d2").string()) == 2);
  CHECK(run(base + " --select 'not-a-selection' --out " + (tmp / "d3").string()) == 2);
}

TEST_CASE("cli: config file is honored and flags win over it") {
  const auto bin = binary("FACELIGHT_BIN");
  ft::TempDir tmp;
  SynthConfig scfg;
  scfg.seed = 15;
  scfg.subjects_per_group = 6;
  scfg.images_per_subject = 4;
  scfg.dim = 16;
  scfg.pixels_per_image = 256;
  auto data = generate_synthetic(scfg);
  auto manifest = write_synthetic(data, tmp.path());

  auto config = tmp / "facelight.cfg";
  ft::write_text(config,
                 "# audit settings\n"
                 "calibration.group = G3\n"
                 "calibration.target_fmr = 0.02\n"
                 "support.min_impostor = 100\n"
                 "support.min_genuine_window = 5\n");

  const std::string base = bin + " audit --manifest " + manifest.string() +
                           " --profiles " + (tmp / "profiles.csv").string() +
                           " --embeddings " + (tmp / "embeddings.bin").string() +
                           " --ids " + (tmp / "embeddings.ids").string();

  CHECK(run(base + " --config " + config.string() + " --out " +
            (tmp / "ra").string()) == 0);
  auto ja = ft::read_bytes(tmp / "ra/report.json");
  CHECK(ja.find("\"calibration_group\": \"G3\"") != std::string::npos);

  // flag beats the config file
  CHECK(run(base + " --config " + config.string() + " --calibration-group G1 --out " +
            (tmp / "rb").string()) == 0);
  auto jb = ft::read_bytes(tmp / "rb/report.json");
  CHECK(jb.find("\"calibration_group\": \"G1\"") != std::string::npos);

  // FACELIGHT_CONFIG is the fallback path
  CHECK(run("FACELIGHT_CONFIG=" + config.string() + " " + base + " --out " +
            (tmp / "rc").string()) == 0);
  auto jc = ft::read_bytes(tmp / "rc/report.json");
  CHECK(jc.find("\"calibration_group\": \"G3\"") != std::string::npos);

  // unknown config keys are rejected
  auto bad = tmp / "bad.cfg";
  ft::write_text(bad, "no.such.key = 1\n");
  CHECK(run(base + " --config " + bad.string() + " --out " +
            (tmp / "rd").string()) == 2);
}

TEST_CASE("cli: facelight-synth emits a loadable dataset") {
  const auto synth = binary("FACELIGHT_SYNTH_BIN");
  ft::TempDir tmp;
  CHECK(run(synth + " --out " + tmp.path().string() +
            " --subjects 5 --images 3 --dim 8 --seed 2") == 0);
  CHECK(std::filesystem::exists(tmp / "manifest.csv"));
  CHECK(std::filesystem::exists(tmp / "profiles.csv"));
  CHECK(std::filesystem::exists(tmp / "embeddings.bin"));
  auto rows = read_profiles_csv(tmp / "profiles.csv");
  CHECK(rows.size() == 4 * 5 * 3);
}
