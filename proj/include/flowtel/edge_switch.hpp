#ifndef FLOWTEL_EDGE_SWITCH_HPP
#define FLOWTEL_EDGE_SWITCH_HPP

#include <cstdint>
#include <optional>

#include "flowtel/fermat_sketch.hpp"
#include "flowtel/tower.hpp"

namespace flowtel {

// Bucket split of the upstream encoder; the downstream encoder reuses the
// HL and LL sizes so the parts stay combine-compatible switch to switch.
struct EncoderLayout {
   uint32_t m_hh = 0;
   uint32_t m_hl = 0;
   uint32_t m_ll = 0;

   uint32_t upstream_total() const { return m_hh + m_hl + m_ll; }
   void validate(uint32_t m_uf, uint32_t m_df) const;
   bool operator==(const EncoderLayout&) const = default;
};

// Fingerprint width of every switch encoder. Flow IDs must leave this many
// spare high bits: with the default modulus that means IDs below 2^52.
inline constexpr uint32_t kEncoderFingerprintBits = 8;

struct SwitchConfig {
   uint32_t m_uf = 4096;
   uint32_t m_df = 3072;
   uint32_t d = 3;
   uint64_t p = kDefaultPrime;
   uint64_t master_seed = 1;
   EncoderLayout layout{3584, 512, 0};
   ClassifierThresholds thresholds;
   TowerConfig tower;
   uint64_t generation = 0;  // bumped on every staged reconfiguration

   void validate() const;
   static SwitchConfig make(uint64_t master_seed);
   bool operator==(const SwitchConfig&) const = default;
};

struct TaggedPacket {
   uint64_t flow = 0;
   uint32_t ingress_switch = 0;
   uint32_t egress_switch = 0;
   Hierarchy hierarchy = Hierarchy::NonSampledLL;
   uint8_t epoch_bit = 0;
};

struct SketchGroup {
   SwitchConfig config;
   TowerSketch classifier;
   FermatSketch up_hh;
   FermatSketch up_hl;
   std::optional<FermatSketch> up_ll;
   FermatSketch down_hl;
   std::optional<FermatSketch> down_ll;
   uint64_t epoch_index = 0;
   uint32_t switch_id = 0;

   static SketchGroup make(const SwitchConfig& config);
};

struct StagedConfig {
   EncoderLayout layout;
   ClassifierThresholds thresholds;
};

class EdgeSwitch {
public:
   EdgeSwitch(uint32_t id, SwitchConfig initial);

   uint32_t id() const { return id_; }
   uint8_t current_bit() const { return bit_; }
   const SwitchConfig& active_config() const { return groups_[bit_].config; }
   const SketchGroup& active_group() const { return groups_[bit_]; }

   // Stamps the epoch bit, classifies on the post-insertion estimate and
   // encodes into the matching upstream part. Non-sampled LL packets skip
   // the encoders; the classifier sees every packet.
   TaggedPacket process_ingress(uint64_t flow, uint32_t egress_switch);

   // Encodes a delivered packet downstream by its carried tag.
   void process_egress(const TaggedPacket& pkt);

   // Ends the epoch for the active bit: returns the frozen group, resets
   // that bit's group (folding in any staged config) and flips the bit.
   SketchGroup rotate_epoch();

   void stage_reconfig(const EncoderLayout& layout, const ClassifierThresholds& thresholds);
   bool has_staged() const { return staged_.has_value(); }

   // Rebuilds the idle group with the staged config, for staging decided
   // between epochs after the frozen group was collected. The config then
   // functions one full epoch later.
   void apply_staged_to_idle();

private:
   SwitchConfig config_with(const SwitchConfig& base, const StagedConfig& staged) const;

   uint32_t id_;
   uint8_t bit_ = 0;
   uint64_t epoch_index_ = 0;
   std::optional<StagedConfig> staged_;
   int staged_applies_left_ = 0;
   SketchGroup groups_[2];
};

}  // namespace flowtel

#endif
