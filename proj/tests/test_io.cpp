#include <limits>

#include "doctest.h"
#include "pragsim/io.hpp"
#include "support.hpp"

using namespace pragsim;
using testing::error_of;
using testing::spit;
using testing::TempDir;
using testing::U;
using nlohmann::json;

TEST_CASE("mask files") {
  TempDir dir;
  spit(dir / "m.json", "[0, 3, 7]");
  CHECK(io::read_mask(dir / "m.json").indices() == std::vector<std::size_t>{0, 3, 7});
  io::write_mask(FeatureMask::of({2, 5}), dir / "out.json");
  CHECK(io::read_mask(dir / "out.json") == FeatureMask::of({2, 5}));

  spit(dir / "bad.json", "[3, 1]");
  CHECK(error_of([&] { io::read_mask(dir / "bad.json"); }) == ErrorCode::InvalidMask);
  spit(dir / "neg.json", "[-1, 2]");
  CHECK(error_of([&] { io::read_mask(dir / "neg.json"); }) == ErrorCode::InvalidMask);
  spit(dir / "obj.json", "{\"a\": 1}");
  CHECK(error_of([&] { io::read_mask(dir / "obj.json"); }) == ErrorCode::InvalidMask);
  spit(dir / "empty.json", "[]");
  CHECK(error_of([&] { io::read_mask(dir / "empty.json"); }) == ErrorCode::InvalidMask);
  CHECK(error_of([&] { io::read_mask(dir / "none.json"); }) == ErrorCode::MissingFile);
}

TEST_CASE("similarity config files") {
  TempDir dir;
  auto ds = testing::build({U("a", "s1", {1, 3, 0}), U("b", "s2", {3, 5, 1})}, 2);
  std::filesystem::create_directories(dir / "sub");
  spit(dir / "sub/mask.json", "[0, 1]");
  spit(dir / "sub/cfg.json", R"({"layer_index": 2, "mask_path": "mask.json", "mean_center": true})");
  auto file = io::read_config_file(dir / "sub/cfg.json");
  CHECK(file.layer_index == 2);
  CHECK(file.mask_path == "mask.json");
  CHECK(file.mean_center);
  auto cfg = io::resolve_config(file, dir / "sub", ds);
  CHECK(cfg.layer_index == 2);
  CHECK(cfg.mask == FeatureMask::of({0, 1}));
  REQUIRE(cfg.center.has_value());
  CHECK(*cfg.center == std::vector<double>{2, 4});

  spit(dir / "defaults.json", "{}");
  auto d = io::read_config_file(dir / "defaults.json");
  CHECK(d.layer_index == 24);
  CHECK(d.mask_path == "all");
  CHECK_FALSE(d.mean_center);
  CHECK(error_of([&] { io::resolve_config(d, dir.path(), ds); }) == ErrorCode::InvalidLayerIndex);

  spit(dir / "typo.json", R"({"layer": 2})");
  CHECK(error_of([&] { io::read_config_file(dir / "typo.json"); }) == ErrorCode::InvalidConfig);
  spit(dir / "type.json", R"({"layer_index": "two"})");
  CHECK(error_of([&] { io::read_config_file(dir / "type.json"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("csv reader") {
  TempDir dir;
  spit(dir / "a.csv", "x,y,z\n1,\"two, three\",\"say \"\"hi\"\"\"\r\n4,5,6\n\n");
  auto rows = io::read_csv(dir / "a.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "two, three");
  CHECK(rows[1][2] == "say \"hi\"");
  CHECK(rows[2][2] == "6");
  spit(dir / "ragged.csv", "x,y\n1\n");
  CHECK(error_of([&] { io::read_csv(dir / "ragged.csv"); }) == ErrorCode::MalformedCsv);
  spit(dir / "quote.csv", "x,y\n\"1,2\n");
  CHECK(error_of([&] { io::read_csv(dir / "quote.csv"); }) == ErrorCode::MalformedCsv);
  spit(dir / "empty.csv", "");
  CHECK(error_of([&] { io::read_csv(dir / "empty.csv"); }) == ErrorCode::MalformedCsv);
}

TEST_CASE("rated pairs") {
  TempDir dir;
  spit(dir / "p.csv", "id_a,id_b,judge_id,rating\nu1,u2,j1,4\nu1,u3,,2.5\n");
  auto pairs = io::read_rated_pairs(dir / "p.csv");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].judge_id == "j1");
  CHECK(pairs[0].rating == 4.0);
  CHECK_FALSE(pairs[1].judge_id.has_value());
  spit(dir / "nojudge.csv", "id_a,id_b,rating\nu1,u2,3\n");
  CHECK(io::read_rated_pairs(dir / "nojudge.csv").size() == 1);
  spit(dir / "bad.csv", "id_a,id_b,rating\nu1,u2,high\n");
  CHECK(error_of([&] { io::read_rated_pairs(dir / "bad.csv"); }) == ErrorCode::MalformedCsv);
  spit(dir / "nocol.csv", "id_a,rating\nu1,3\n");
  CHECK(error_of([&] { io::read_rated_pairs(dir / "nocol.csv"); }) == ErrorCode::MalformedCsv);
}

TEST_CASE("judgments: csv and json agree") {
  TempDir dir;
  spit(dir / "j.csv",
       "set_id,reference_id,candidate_id,judge_id,rating,top3_rank\n"
       "s1,r1,c1,j1,5,1\n"
       "s1,r1,c2,j1,3,3\n"
       "s1,r1,c3,j1,4,2\n"
       "s1,r1,c1,j2,2,\n"
       "s1,r1,c2,j2,4,\n"
       "s1,r1,c3,j2,1,\n"
       "s2,r2,c4,j1,1,\n"
       "s2,r2,c5,j1,2,\n");
  auto j = io::read_judgments(dir / "j.csv");
  REQUIRE(j.sets.size() == 2);
  CHECK(j.sets[0].candidates == std::vector<std::string>{"c1", "c2", "c3"});
  CHECK(j.sets[0].ratings.at("j2").at("c2") == 4.0);
  CHECK(j.sets[0].top3.at("j1") == std::vector<std::string>{"c1", "c3", "c2"});
  CHECK_FALSE(j.sets[0].top3.contains("j2"));

  spit(dir / "j.json", io::judgments_to_json(j).dump());
  auto back = io::read_judgments(dir / "j.json");
  REQUIRE(back.sets.size() == 2);
  CHECK(back.sets[0].ratings == j.sets[0].ratings);
  CHECK(back.sets[0].top3 == j.sets[0].top3);
  CHECK(back.sets[1].candidates == j.sets[1].candidates);

  spit(dir / "gap.csv",
       "set_id,reference_id,candidate_id,judge_id,rating,top3_rank\ns1,r1,c1,j1,5,1\ns1,r1,c2,j1,3,3\n");
  CHECK(error_of([&] { io::read_judgments(dir / "gap.csv"); }) == ErrorCode::MalformedJudgments);
  spit(dir / "ref.csv",
       "set_id,reference_id,candidate_id,judge_id,rating\ns1,r1,c1,j1,5\ns1,r9,c2,j1,3\n");
  CHECK(error_of([&] { io::read_judgments(dir / "ref.csv"); }) == ErrorCode::MalformedJudgments);
  spit(dir / "bad.json", R"({"sets": [{"set_id": "s"}]})");
  CHECK(error_of([&] { io::read_judgments(dir / "bad.json"); }) == ErrorCode::MalformedJudgments);
}

TEST_CASE("synthetic spec json round trip") {
  SynthSpec spec;
  spec.classes = {{"ASD", 14, 10, 3.5, 0.3, 0.6}, {"NT", 14, 10}};
  spec.seed = 99;
  spec.age_min = 4;
  spec.age_max = 10;
  auto back = io::synth_spec_from_json(io::synth_spec_to_json(spec));
  CHECK(io::synth_spec_to_json(back) == io::synth_spec_to_json(spec));
  CHECK(back.classes[0].duration_mean_s == 3.5);
  CHECK(back.age_max == 10);
  CHECK(error_of([] { io::synth_spec_from_json(json::parse(R"({"classes": [{"label": 3}]})")); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("report json shapes") {
  RankedList list{"q", {{"a", 0.5, 1}, {"b", 0.25, 2}}};
  auto j = io::to_json(list);
  CHECK(j["query"] == "q");
  CHECK(j["entries"][1]["id"] == "b");
  CHECK(j["entries"][1]["rank"] == 2);

  LosoResult r;
  r.confusion = binary_confusion(10, 4, 1, 13, "ASD", "NT");
  r.per_speaker = {{"s1", "ASD", "NT"}};
  auto lj = io::to_json(r);
  CHECK(lj["accuracy"] == 23.0 / 28.0);
  CHECK(lj["per_speaker"][0]["true"] == "ASD");
  CHECK(lj["per_speaker"][0]["predicted"] == "NT");
  CHECK(lj["confusion"]["counts"]["ASD"]["NT"] == 4);

  std::vector<SweepRow> rows{{-std::numeric_limits<double>::infinity(), 0, 2, 0, 3, 0.6},
                             {std::numeric_limits<double>::infinity(), 2, 0, 3, 0, 0.4}};
  auto sj = io::to_json(rows);
  CHECK(sj[0]["threshold"] == "-inf");
  CHECK(sj[1]["threshold"] == "inf");
  auto tsv = io::sweep_tsv(rows);
  CHECK(tsv.rfind("threshold\t", 0) == 0);
  CHECK(tsv.find("\n-inf\t0\t2\t0\t3\t") != std::string::npos);

  auto ds = testing::build({U("a", "s1", {1, 0}, "X"), U("b", "s2", {0, 1})}, 2);
  auto summary = io::dataset_summary(ds);
  CHECK(summary["n"] == 2);
  CHECK(summary["L"] == 2);
  CHECK(summary["dims"] == json::array({2, 2}));
  CHECK(summary["speakers"] == 2);
}
