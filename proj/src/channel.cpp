#include "netmpc/channel.hpp"

#include <fstream>
#include <stdexcept>

#include "netmpc/rng.hpp"

namespace netmpc {

ChannelModel ChannelModel::bernoulli(double loss_prob, uint64_t seed) {
  if (loss_prob < 0.0 || loss_prob > 1.0)
    throw std::invalid_argument("channel: loss probability outside [0,1]");
  ChannelModel c;
  c.kind_ = Kind::Bernoulli;
  c.loss_prob_ = loss_prob;
  c.rng_state_ = splitmix64(seed);
  return c;
}

ChannelModel ChannelModel::gilbert_elliott(double p_good_to_bad,
                                           double p_bad_to_good,
                                           double loss_good, double loss_bad,
                                           uint64_t seed,
                                           std::shared_ptr<GeState> shared) {
  for (double v : {p_good_to_bad, p_bad_to_good, loss_good, loss_bad})
    if (v < 0.0 || v > 1.0)
      throw std::invalid_argument("channel: probability outside [0,1]");
  ChannelModel c;
  c.kind_ = Kind::GilbertElliott;
  c.p_gb_ = p_good_to_bad;
  c.p_bg_ = p_bad_to_good;
  c.loss_good_ = loss_good;
  c.loss_bad_ = loss_bad;
  c.ge_ = shared ? std::move(shared) : std::make_shared<GeState>();
  c.rng_state_ = splitmix64(seed);
  return c;
}

ChannelModel ChannelModel::trace_replay(std::vector<uint8_t> bits) {
  ChannelModel c;
  c.kind_ = Kind::Replay;
  c.bits_ = std::move(bits);
  return c;
}

double ChannelModel::uniform() {
  rng_state_ = splitmix64(rng_state_);
  return static_cast<double>(rng_state_ >> 11) * 0x1.0p-53;
}

bool ChannelModel::realize_step() {
  bool delivered = true;
  switch (kind_) {
    case Kind::Bernoulli:
      delivered = uniform() >= loss_prob_;
      break;
    case Kind::GilbertElliott: {
      double loss = ge_->bad ? loss_bad_ : loss_good_;
      delivered = uniform() >= loss;
      double flip = ge_->bad ? p_bg_ : p_gb_;
      if (uniform() < flip) ge_->bad = !ge_->bad;
      break;
    }
    case Kind::Replay:
      if (pos_ >= bits_.size())
        throw std::runtime_error("channel replay: trace exhausted");
      delivered = bits_[pos_++] != 0;
      break;
  }
  history_.push_back(delivered ? 1 : 0);
  return delivered;
}

void LossGuard::observe_round(bool uplink_ok, bool downlink_ok) {
  if (!enabled()) return;
  if (uplink_ok && downlink_ok) {
    failures_ = 0;
    force_ = false;
  } else {
    ++failures_;
    if (failures_ >= limit_) force_ = true;
  }
}

ChannelModel make_channel(const ChannelSpec& spec, uint64_t seed,
                          std::shared_ptr<GeState> shared) {
  switch (spec.kind) {
    case ChannelSpec::Kind::Bernoulli:
      return ChannelModel::bernoulli(spec.loss, seed);
    case ChannelSpec::Kind::GilbertElliott:
      return ChannelModel::gilbert_elliott(spec.p_good_to_bad,
                                           spec.p_bad_to_good, spec.loss_good,
                                           spec.loss_bad, seed,
                                           std::move(shared));
    case ChannelSpec::Kind::Replay:
      if (!spec.trace_bits.empty())
        return ChannelModel::trace_replay(spec.trace_bits);
      return ChannelModel::trace_replay(read_bit_file(spec.trace_path));
  }
  throw std::logic_error("channel: unknown kind");
}

std::vector<uint8_t> read_bit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bit trace: " + path);
  std::vector<uint8_t> bits;
  char ch;
  while (in.get(ch)) {
    if (ch == '0')
      bits.push_back(0);
    else if (ch == '1')
      bits.push_back(1);
    else if (ch != '\n' && ch != '\r' && ch != ' ' && ch != '\t')
      throw std::runtime_error("bit trace: unexpected character in " + path);
  }
  return bits;
}

void write_bit_file(const std::string& path,
                    const std::vector<uint8_t>& bits) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bit trace: " + path);
  for (uint8_t b : bits) out.put(b ? '1' : '0');
  out.put('\n');
}

}  // namespace netmpc
