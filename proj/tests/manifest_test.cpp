#include "doctest.h"

#include "facelight/errors.hpp"
#include "facelight/manifest.hpp"
#include "test_support.hpp"

using namespace facelight;
namespace ft = facelight::test;

TEST_CASE("manifest: two valid rows parse in file order") {
  ft::TempDir tmp;
  auto path = tmp / "m.csv";
  ft::write_text(path,
                 "image_id,subject_id,group,image_path,mask_path\n"
                 "i1,s1,CM,img/i1.png,mask/i1.png\n"
                 "i2,s1,CM,img/i2.png,mask/i2.png\n");
  auto records = load_manifest(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].image_id == "i1");
  CHECK(records[1].image_id == "i2");
  CHECK(records[0].subject_id == "s1");
  CHECK(records[0].group == "CM");
  CHECK(records[0].image_path == "img/i1.png");
  CHECK_FALSE(records[0].embedding_index.has_value());
}

TEST_CASE("manifest: duplicate image_id names the id and both lines") {
  ft::TempDir tmp;
  auto path = tmp / "m.csv";
  // duplicate "x" on data lines 3 and 7
  ft::write_text(path,
                 "image_id,subject_id,group,image_path,mask_path\n"
                 "a,s1,CM,p,q\n"
                 "x,s1,CM,p,q\n"
                 "b,s2,CM,p,q\n"
                 "c,s2,CM,p,q\n"
                 "d,s3,CM,p,q\n"
                 "x,s3,CM,p,q\n");
  try {
    load_manifest(path);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    CHECK(msg.find("'x'") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("7") != std::string::npos);
  }
}

TEST_CASE("manifest: error cases") {
  ft::TempDir tmp;
  CHECK_THROWS_AS(load_manifest(tmp / "missing.csv"), ValidationError);

  auto bad_header = tmp / "h.csv";
  ft::write_text(bad_header, "id,subject,grp\n");
  CHECK_THROWS_AS(load_manifest(bad_header), ValidationError);

  auto empty = tmp / "e.csv";
  ft::write_text(empty, "image_id,subject_id,group,image_path,mask_path\n");
  CHECK_THROWS_AS(load_manifest(empty), ValidationError);

  auto short_row = tmp / "s.csv";
  ft::write_text(short_row,
                 "image_id,subject_id,group,image_path,mask_path\n"
                 "a,s1,CM,p\n");
  CHECK_THROWS_AS(load_manifest(short_row), ValidationError);
}

TEST_CASE("manifest: embedding_index column") {
  ft::TempDir tmp;
  auto path = tmp / "m.csv";
  ft::write_text(path,
                 "image_id,subject_id,group,image_path,mask_path,embedding_index\n"
                 "a,s1,CM,p,q,0\n"
                 "b,s1,CM,p,q,17\n"
                 "c,s2,CM,p,q,\n");
  auto records = load_manifest(path);
  REQUIRE(records.size() == 3);
  CHECK(records[0].embedding_index == 0u);
  CHECK(records[1].embedding_index == 17u);
  CHECK_FALSE(records[2].embedding_index.has_value());

  auto bad = tmp / "b.csv";
  ft::write_text(bad,
                 "image_id,subject_id,group,image_path,mask_path,embedding_index\n"
                 "a,s1,CM,p,q,-3\n");
  CHECK_THROWS_AS(load_manifest(bad), ValidationError);
}

TEST_CASE("manifest: declared groups restrict records") {
  ft::TempDir tmp;
  auto path = tmp / "m.csv";
  ft::write_text(path,
                 "image_id,subject_id,group,image_path,mask_path\n"
                 "a,s1,CM,p,q\n"
                 "b,s2,AAF,p,q\n");
  CHECK(load_manifest(path, {"CM", "AAF"}).size() == 2);
  CHECK_THROWS_AS(load_manifest(path, {"CM"}), ValidationError);
}

TEST_CASE("manifest: record count equals data-line count (order-preserving, total)") {
  ft::TempDir tmp;
  auto path = tmp / "m.csv";
  std::string text = "image_id,subject_id,group,image_path,mask_path\n";
  const int n = 137;
  for (int i = 0; i < n; ++i) {
    text += "img" + std::to_string(i) + ",s" + std::to_string(i % 10) + ",G,p,q\n";
  }
  ft::write_text(path, text);
  auto records = load_manifest(path);
  REQUIRE(records.size() == static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    CHECK(records[i].image_id == "img" + std::to_string(i));
  }
  CHECK(distinct_groups(records) == std::vector<std::string>{"G"});
  CHECK(index_by_image_id(records).at("img5") == 5);
}
