#include "flowtel/edge_switch.hpp"

#include "flowtel/errors.hpp"
#include "flowtel/hashing.hpp"

namespace flowtel {

void EncoderLayout::validate(uint32_t m_uf, uint32_t m_df) const {
   if (m_hh == 0 || m_hl == 0)
      throw bad_parameter("HH and HL parts need at least one bucket");
   if (upstream_total() != m_uf)
      throw bad_parameter("parts must add up to the upstream encoder size");
   if (m_hl + m_ll > m_df)
      throw bad_parameter("HL and LL parts exceed the downstream encoder");
}

void SwitchConfig::validate() const {
   layout.validate(m_uf, m_df);
   thresholds.validate();
   tower.validate();
   if (d < 2)
      throw bad_parameter("need at least 2 bucket arrays");
   if (!is_prime(p))
      throw bad_parameter("modulus is not prime");
   if (thresholds.t_l > 1 && layout.m_ll == 0)
      throw bad_parameter("a live LL boundary needs a LL part");
}

SwitchConfig SwitchConfig::make(uint64_t master_seed) {
   SwitchConfig cfg;
   cfg.master_seed = master_seed;
   cfg.tower = TowerConfig::two_level_default(master_seed);
   cfg.thresholds.t_h = 100;
   cfg.thresholds.t_l = 1;
   cfg.thresholds.sample_rate = 1.0;
   cfg.thresholds.sample_seed = derive_seed(master_seed, "sample");
   cfg.validate();
   return cfg;
}

SketchGroup SketchGroup::make(const SwitchConfig& config) {
   config.validate();
   // Encoders carry a short fingerprint so a garbage ID recovered from a
   // collided bucket is rejected instead of corrupting the peel. Real
   // deployments get this for free from the gap between the ID space and
   // the modulus; synthetic IDs need it made explicit.
   auto part = [&](uint32_t m) {
      return FermatParams::make(config.d, m, config.master_seed, config.p, kEncoderFingerprintBits);
   };
   SketchGroup g{
      config,
      TowerSketch(config.tower),
      FermatSketch(part(config.layout.m_hh)),
      FermatSketch(part(config.layout.m_hl)),
      std::nullopt,
      FermatSketch(part(config.layout.m_hl)),
      std::nullopt,
      0,
      0,
   };
   if (config.layout.m_ll > 0) {
      g.up_ll.emplace(part(config.layout.m_ll));
      g.down_ll.emplace(part(config.layout.m_ll));
   }
   return g;
}

EdgeSwitch::EdgeSwitch(uint32_t id, SwitchConfig initial)
      : id_(id), groups_{SketchGroup::make(initial), SketchGroup::make(initial)} {
   groups_[0].switch_id = id_;
   groups_[1].switch_id = id_;
}

TaggedPacket EdgeSwitch::process_ingress(uint64_t flow, uint32_t egress_switch) {
   SketchGroup& g = groups_[bit_];
   TowerSketch::Estimate est = g.classifier.update_and_query(flow);
   Hierarchy h = classify_estimate(est, flow, g.config.thresholds);
   switch (h) {
   case Hierarchy::HHCandidate:
      g.up_hh.insert(flow);
      break;
   case Hierarchy::HLCandidate:
      g.up_hl.insert(flow);
      break;
   case Hierarchy::SampledLL:
      g.up_ll->insert(flow);
      break;
   case Hierarchy::NonSampledLL:
      break;
   }
   return TaggedPacket{flow, id_, egress_switch, h, bit_};
}

void EdgeSwitch::process_egress(const TaggedPacket& pkt) {
   SketchGroup& g = groups_[pkt.epoch_bit];
   switch (pkt.hierarchy) {
   case Hierarchy::HHCandidate:
   case Hierarchy::HLCandidate:
      g.down_hl.insert(pkt.flow);
      break;
   case Hierarchy::SampledLL:
      g.down_ll->insert(pkt.flow);
      break;
   case Hierarchy::NonSampledLL:
      break;
   }
}

SketchGroup EdgeSwitch::rotate_epoch() {
   SketchGroup frozen = std::move(groups_[bit_]);
   frozen.epoch_index = epoch_index_;
   frozen.switch_id = id_;

   // A staged config must reach both groups; otherwise the two epoch
   // parities would keep running different layouts.
   SwitchConfig next = frozen.config;
   if (staged_ && staged_applies_left_ > 0) {
      next = config_with(frozen.config, *staged_);
      if (--staged_applies_left_ == 0)
         staged_.reset();
   }
   groups_[bit_] = SketchGroup::make(next);
   groups_[bit_].switch_id = id_;

   bit_ ^= 1;
   ++epoch_index_;
   return frozen;
}

void EdgeSwitch::stage_reconfig(const EncoderLayout& layout, const ClassifierThresholds& thresholds) {
   StagedConfig staged{layout, thresholds};
   config_with(groups_[bit_].config, staged).validate();
   staged_ = staged;
   staged_applies_left_ = 2;
}

void EdgeSwitch::apply_staged_to_idle() {
   if (!staged_ || staged_applies_left_ == 0)
      return;
   uint8_t idle = bit_ ^ 1;
   SwitchConfig next = config_with(groups_[bit_].config, *staged_);
   if (--staged_applies_left_ == 0)
      staged_.reset();
   groups_[idle] = SketchGroup::make(next);
   groups_[idle].switch_id = id_;
}

SwitchConfig EdgeSwitch::config_with(const SwitchConfig& base, const StagedConfig& staged) const {
   SwitchConfig next = base;
   next.layout = staged.layout;
   next.thresholds = staged.thresholds;
   next.generation += 1;
   return next;
}

}  // namespace flowtel
