#include "doctest.h"

#include <cstdio>
#include <string>

#include "json.hpp"

#include "flowtel/edge_switch.hpp"
#include "flowtel/errors.hpp"
#include "flowtel/hashing.hpp"
#include "flowtel/serialize.hpp"

using namespace flowtel;
using nlohmann::json;

namespace {

FermatSketch sample_sketch() {
   FermatParams params = FermatParams::make(3, 40, 71, kDefaultPrime, 8);
   FermatSketch s(params);
   for (uint64_t i = 0; i < 60; ++i) s.update(1 + keyed_hash(i, 71) % ((1ull << 40) - 1), (int64_t)(i % 11) - 5);
   return s;
}

TowerSketch sample_tower() {
   TowerConfig cfg;
   cfg.levels = {TowerLevel{64, 8, 5}, TowerLevel{32, 16, 6}};
   TowerSketch t(cfg);
   for (uint64_t i = 0; i < 900; ++i) t.update(1 + keyed_hash(i, 12) % 200);
   return t;
}

std::string temp_path(const char* name) { return std::string("serialize_test_") + name; }

}  // namespace

TEST_CASE("sketch binary round-trip preserves equality") {
   FermatSketch s = sample_sketch();
   std::string bytes = to_binary(s);
   CHECK(fermat_from_binary(bytes) == s);
}

TEST_CASE("sketch binary layout is stable") {
   FermatParams params = FermatParams::make(2, 4, 1, 31);
   FermatSketch s(params);
   s.update(24, 3);
   std::string bytes = to_binary(s);
   // header, seeds, then d*m fixed-width bucket pairs
   CHECK(bytes.size() == 36 + 8 * 2 + 16 * 2 * 4);
   CHECK(bytes.substr(0, 4) == std::string("\x31\x4b\x53\x46", 4));
   CHECK(bytes[4] == 1);  // format version, little endian
   CHECK(bytes[8] == 2);  // d
   CHECK(bytes[12] == 4);  // m
}

TEST_CASE("sketch JSON round-trip preserves equality") {
   FermatSketch s = sample_sketch();
   json j = to_json(s);
   CHECK(j.at("format") == "fermat-sketch");
   CHECK(j.at("arrays").size() == 3);
   CHECK(fermat_from_json(j) == s);
}

TEST_CASE("tower binary and JSON round-trips preserve equality") {
   TowerSketch t = sample_tower();
   CHECK(tower_from_binary(to_binary(t)) == t);
   json j = to_json(t);
   CHECK(j.at("format") == "tower-sketch");
   CHECK(tower_from_json(j) == t);
}

TEST_CASE("tower binary layout is stable") {
   TowerConfig cfg;
   cfg.levels = {TowerLevel{4, 2, 11}, TowerLevel{2, 4, 22}};
   TowerSketch t(cfg);
   std::string bytes = to_binary(t);
   CHECK(bytes.size() == 12 + 2 * 16 + 6 * 4);
   CHECK(bytes.substr(0, 4) == std::string("\x31\x4b\x53\x54", 4));
}

TEST_CASE("malformed payloads are rejected") {
   FermatSketch s = sample_sketch();
   std::string bytes = to_binary(s);

   std::string truncated = bytes.substr(0, bytes.size() / 2);
   CHECK_THROWS_AS(fermat_from_binary(truncated), Error);

   std::string trailing = bytes + "x";
   CHECK_THROWS_AS(fermat_from_binary(trailing), Error);

   std::string wrong_magic = bytes;
   wrong_magic[0] = 'Z';
   CHECK_THROWS_AS(fermat_from_binary(wrong_magic), Error);

   TowerSketch t = sample_tower();
   CHECK_THROWS_AS(tower_from_binary(to_binary(s)), Error);
   CHECK_THROWS_AS(fermat_from_binary(to_binary(t)), Error);

   json j = to_json(s);
   j["format"] = "something-else";
   CHECK_THROWS_AS(fermat_from_json(j), Error);

   json bad_residue = to_json(s);
   bad_residue["arrays"][0]["idsums"][0] = kDefaultPrime;
   CHECK_THROWS_AS(fermat_from_json(bad_residue), Error);

   json bad_counter = to_json(t);
   bad_counter["levels"][0]["counters"][0] = 256;  // above the 8-bit ceiling
   CHECK_THROWS_AS(tower_from_json(bad_counter), Error);
}

TEST_CASE("file round-trip and format sniffing") {
   FermatSketch s = sample_sketch();

   std::string bin_path = temp_path("sketch.bin");
   save_file(bin_path, to_binary(s));
   CHECK(fermat_from_file(bin_path) == s);

   std::string json_path = temp_path("sketch.json");
   save_file(json_path, to_json(s).dump());
   CHECK(fermat_from_file(json_path) == s);

   CHECK(load_file(bin_path) == to_binary(s));
   std::remove(bin_path.c_str());
   std::remove(json_path.c_str());

   CHECK_THROWS_AS(load_file("no_such_directory_xyz/sketch.bin"), Error);
   CHECK_THROWS_AS(save_file("no_such_directory_xyz/sketch.bin", "x"), Error);
}

TEST_CASE("flowset JSON keeps signed frequencies") {
   Flowset fs;
   fs.add(5, 3);
   fs.add(9, -2);
   fs.add((1ull << 50), 1000000);
   json j = to_json(fs);
   CHECK(j.is_array());
   CHECK(j.size() == 3);
   CHECK(flowset_from_json(j) == fs);
}

TEST_CASE("sketch group JSON carries config and all parts") {
   SwitchConfig cfg = SwitchConfig::make(77);
   cfg.layout = EncoderLayout{2048, 1536, 512};
   cfg.thresholds.t_l = 4;
   cfg.thresholds.sample_rate = 0.5;
   SketchGroup g = SketchGroup::make(cfg);
   g.switch_id = 3;
   json j = to_json(g);
   CHECK(j.at("format") == "sketch-group");
   CHECK(j.at("switch_id") == 3);
   CHECK(j.at("layout").at("m_hl") == 1536);
   CHECK(j.at("thresholds").at("t_l") == 4);
   CHECK(j.contains("classifier"));
   CHECK(j.contains("up_hh"));
   CHECK(j.contains("up_hl"));
   CHECK(j.contains("up_ll"));
   CHECK(j.contains("down_hl"));
   CHECK(j.contains("down_ll"));

   SwitchConfig no_ll = SwitchConfig::make(78);
   json j2 = to_json(SketchGroup::make(no_ll));
   CHECK_FALSE(j2.contains("up_ll"));
   CHECK_FALSE(j2.contains("down_ll"));
}
