#ifndef FLOWTEL_SERIALIZE_HPP
#define FLOWTEL_SERIALIZE_HPP

#include <string>

#include "json.hpp"

#include "flowtel/edge_switch.hpp"
#include "flowtel/fermat_sketch.hpp"
#include "flowtel/tower.hpp"

namespace flowtel {

// Flat little-endian dump: magic, format version, params, then the bucket
// grid as (count as signed 64-bit, idsum as unsigned 64-bit) pairs.
std::string to_binary(const FermatSketch& s);
FermatSketch fermat_from_binary(const std::string& bytes);

std::string to_binary(const TowerSketch& t);
TowerSketch tower_from_binary(const std::string& bytes);

nlohmann::json to_json(const FermatSketch& s);
FermatSketch fermat_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TowerSketch& t);
TowerSketch tower_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Flowset& fs);
Flowset flowset_from_json(const nlohmann::json& j);

// Collection dump of one frozen per-epoch group.
nlohmann::json to_json(const SketchGroup& g);

void save_file(const std::string& path, const std::string& bytes);
std::string load_file(const std::string& path);

// Reads a sketch saved as either binary or JSON, sniffing the magic.
FermatSketch fermat_from_file(const std::string& path);

}  // namespace flowtel

#endif
