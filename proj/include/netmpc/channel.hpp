#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace netmpc {

// Shared burst state for the correlated two-link mode: both links read and
// advance one chain, interleaved in the deterministic order the episode
// loop draws them.
struct GeState {
  bool bad = false;
};

// One direction of the link. realize_step() consumes exactly one draw per
// send opportunity, so realization sequences are reproducible from the seed
// regardless of what the rest of the simulation does in between.
class ChannelModel {
public:
  static ChannelModel bernoulli(double loss_prob, uint64_t seed);
  static ChannelModel gilbert_elliott(double p_good_to_bad,
                                      double p_bad_to_good, double loss_good,
                                      double loss_bad, uint64_t seed,
                                      std::shared_ptr<GeState> shared = {});
  // Bits are consumed in order; 1 = delivered. Throws when exhausted.
  static ChannelModel trace_replay(std::vector<uint8_t> bits);

  bool realize_step();  // true = delivered

  const std::vector<uint8_t>& history() const { return history_; }

private:
  ChannelModel() = default;
  double uniform();

  enum class Kind { Bernoulli, GilbertElliott, Replay } kind_ =
      Kind::Bernoulli;
  double loss_prob_ = 0.0;
  double p_gb_ = 0.0, p_bg_ = 0.0, loss_good_ = 0.0, loss_bad_ = 0.0;
  std::shared_ptr<GeState> ge_;
  std::vector<uint8_t> bits_;
  size_t pos_ = 0;
  uint64_t rng_state_ = 0;
  std::vector<uint8_t> history_;
};

// Watchdog for persistent loss: after max_failures consecutive rounds in
// which uplink and downlink did not both succeed, the next round is forced
// through. Callers apply force_round() before drawing and must report every
// round's realized outcome.
class LossGuard {
public:
  explicit LossGuard(int max_failures) : limit_(max_failures) {}

  bool enabled() const { return limit_ > 0; }
  bool force_round() const { return enabled() && force_; }
  void observe_round(bool uplink_ok, bool downlink_ok);

  int consecutive_failures() const { return failures_; }

private:
  int limit_ = 0;
  int failures_ = 0;
  bool force_ = false;
};

std::vector<uint8_t> read_bit_file(const std::string& path);
void write_bit_file(const std::string& path,
                    const std::vector<uint8_t>& bits);

// Config-level channel description; resolved into a live model per episode.
struct ChannelSpec {
  enum class Kind { Bernoulli, GilbertElliott, Replay } kind = Kind::Bernoulli;
  double loss = 0.0;  // Bernoulli
  double p_good_to_bad = 0.0, p_bad_to_good = 0.0;
  double loss_good = 0.0, loss_bad = 1.0;
  std::string trace_path;          // Replay, from file
  std::vector<uint8_t> trace_bits;  // Replay, inline (takes precedence)

  static ChannelSpec bernoulli(double loss) {
    ChannelSpec s;
    s.kind = Kind::Bernoulli;
    s.loss = loss;
    return s;
  }
  static ChannelSpec replay(std::vector<uint8_t> bits) {
    ChannelSpec s;
    s.kind = Kind::Replay;
    s.trace_bits = std::move(bits);
    return s;
  }
};

ChannelModel make_channel(const ChannelSpec& spec, uint64_t seed,
                          std::shared_ptr<GeState> shared = {});

}  // namespace netmpc
