#ifndef FLOWTEL_EXPERIMENTS_HPP
#define FLOWTEL_EXPERIMENTS_HPP

#include <string>

#include "json.hpp"

namespace flowtel::experiments {

// Decode success rate as a function of buckets per flow. cfg keys (all
// optional): seed, trials, flows, d, ratios[].
nlohmann::json threshold_sweep(const nlohmann::json& cfg);

// Minimum buckets for reliable decode along three axes: victim count,
// per-victim loss rate, total flow count. cfg keys: seed, victim_axis[],
// rate_axis[], flow_axis[], fixed_victims, fixed_rate, flow_size.
nlohmann::json loss_sweep(const nlohmann::json& cfg);

// Scripted multi-epoch run with the controller in the loop, on a bimodal
// mice/elephants workload. cfg keys: seed, switches, epochs, mice,
// mouse_size_max, elephants, elephant_size, m_uf, m_df, reserve_hl, t_h,
// tower_width, script[{epoch, victim_ratio, drop_rate}].
nlohmann::json shift_scenario(const nlohmann::json& cfg);

// Estimation quality checks: heavy-hitter F1 on a Zipf trace, cardinality
// relative error, entropy against the closed form.
nlohmann::json accuracy_suite(const nlohmann::json& cfg);

// One-shot decode of a serialized sketch file.
nlohmann::json decode_file(const std::string& path);

// Flattens a runner result's "rows" into CSV text using its "columns".
std::string rows_as_csv(const nlohmann::json& result);

}  // namespace flowtel::experiments

#endif
