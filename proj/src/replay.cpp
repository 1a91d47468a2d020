#include "pushsort/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pushsort/binary_io.hpp"

namespace pushsort {

RankPrioritizedBuffer::RankPrioritizedBuffer(std::size_t capacity, double alpha)
    : capacity_(capacity), alpha_(alpha) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  if (alpha < 0.0) throw std::invalid_argument("replay alpha must be non-negative");
  entries_.reserve(capacity);
}

double RankPrioritizedBuffer::max_priority() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, e.exp.priority_delta);
  return m;
}

SlotHandle RankPrioritizedBuffer::push(Experience exp) {
  if (!entries_.empty()) exp.priority_delta = max_priority();
  exp.priority_delta = std::abs(exp.priority_delta);
  const std::uint64_t seq = next_sequence_++;
  std::size_t slot;
  if (entries_.size() < capacity_) {
    slot = entries_.size();
    entries_.push_back({std::move(exp), seq});
  } else {
    slot = next_slot_;
    entries_[slot] = {std::move(exp), seq};
  }
  next_slot_ = (slot + 1) % capacity_;
  ranks_dirty_ = true;
  return {slot, seq};
}

SlotHandle RankPrioritizedBuffer::newest() const {
  if (entries_.empty()) throw std::logic_error("replay buffer is empty");
  const std::size_t slot = (next_slot_ + capacity_ - 1) % capacity_;
  return {slot, entries_[slot].sequence};
}

const Experience* RankPrioritizedBuffer::get(const SlotHandle& h) const {
  if (h.slot >= entries_.size() || entries_[h.slot].sequence != h.sequence) return nullptr;
  return &entries_[h.slot].exp;
}

void RankPrioritizedBuffer::update_priority(const SlotHandle& h, double new_delta) {
  if (h.slot >= entries_.size() || entries_[h.slot].sequence != h.sequence) {
    ++stale_updates_;
    return;
  }
  entries_[h.slot].exp.priority_delta = std::abs(new_delta);
  ranks_dirty_ = true;
}

void RankPrioritizedBuffer::refresh_ranks() {
  if (!ranks_dirty_ && by_rank_.size() == entries_.size()) return;
  by_rank_.resize(entries_.size());
  std::iota(by_rank_.begin(), by_rank_.end(), std::size_t{0});
  std::sort(by_rank_.begin(), by_rank_.end(), [this](std::size_t a, std::size_t b) {
    const double pa = entries_[a].exp.priority_delta;
    const double pb = entries_[b].exp.priority_delta;
    if (pa != pb) return pa > pb;
    return entries_[a].sequence < entries_[b].sequence;
  });
  rank_of_.resize(entries_.size());
  for (std::size_t r = 0; r < by_rank_.size(); ++r) rank_of_[by_rank_[r]] = r;
  ranks_dirty_ = false;
}

void RankPrioritizedBuffer::refresh_cdf() {
  if (cdf_size_ == entries_.size() && cdf_.size() == entries_.size()) return;
  cdf_.resize(entries_.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < cdf_.size(); ++r) {
    acc += std::pow(1.0 / static_cast<double>(r + 1), alpha_);
    cdf_[r] = acc;
  }
  cdf_size_ = entries_.size();
}

double RankPrioritizedBuffer::probability(std::size_t slot) {
  if (slot >= entries_.size()) throw std::out_of_range("replay slot out of range");
  refresh_ranks();
  refresh_cdf();
  const double rank = static_cast<double>(rank_of_[slot] + 1);
  return std::pow(1.0 / rank, alpha_) / cdf_.back();
}

std::size_t RankPrioritizedBuffer::slot_at_rank(std::size_t rank) {
  if (rank == 0 || rank > entries_.size()) throw std::out_of_range("rank out of range");
  refresh_ranks();
  return by_rank_[rank - 1];
}

std::vector<SampledExperience> RankPrioritizedBuffer::sample(std::size_t n, std::mt19937_64& rng) {
  if (entries_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
  refresh_ranks();
  refresh_cdf();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SampledExperience> out;
  out.reserve(n);
  const double total = cdf_.back();
  for (std::size_t i = 0; i < n; ++i) {
    const double u = unit(rng) * total;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) --it;
    const std::size_t slot = by_rank_[static_cast<std::size_t>(it - cdf_.begin())];
    out.push_back({{slot, entries_[slot].sequence}, &entries_[slot].exp});
  }
  return out;
}

namespace {
void write_map(BinaryWriter& w, const Heightmap& m) {
  w.u32(static_cast<std::uint32_t>(m.size()));
  w.f64s(m.values());
}
Heightmap read_map(BinaryReader& r) {
  const auto g = r.u32();
  if (g > 4096) throw CheckpointError("replay snapshot: implausible heightmap size");
  Heightmap m(static_cast<int>(g));
  r.f64s(m.values());
  return m;
}
}  // namespace

void RankPrioritizedBuffer::save(const std::filesystem::path& path) const {
  BinaryWriter w(path);
  w.header(kBufferMagic);
  w.u64(entries_.size());
  w.u64(capacity_);
  w.f64(alpha_);
  w.u64(next_slot_);
  w.u64(next_sequence_);
  w.u64(stale_updates_);
  for (const auto& e : entries_) {
    w.u64(e.sequence);
    write_map(w, e.exp.state);
    w.u64(e.exp.action);
    w.f64(e.exp.reward);
    write_map(w, e.exp.next_state);
    w.u8(static_cast<std::uint8_t>((e.exp.terminal ? 1 : 0) | (e.exp.truncated ? 2 : 0) |
                                   (e.exp.changed ? 4 : 0) |
                                   (e.exp.stored_label.has_value() ? 8 : 0)));
    w.f64(e.exp.stored_label.value_or(0.0));
    w.f64(e.exp.priority_delta);
  }
  w.close();
}

RankPrioritizedBuffer RankPrioritizedBuffer::load(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.header(kBufferMagic);
  const std::uint64_t count = r.u64();
  const std::uint64_t capacity = r.u64();
  const double alpha = r.f64();
  if (capacity == 0 || count > capacity || capacity > (1ULL << 24)) {
    throw CheckpointError(path.string() + ": inconsistent replay header");
  }
  RankPrioritizedBuffer buf(static_cast<std::size_t>(capacity), alpha);
  buf.next_slot_ = static_cast<std::size_t>(r.u64());
  buf.next_sequence_ = r.u64();
  buf.stale_updates_ = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    e.sequence = r.u64();
    e.exp.state = read_map(r);
    e.exp.action = static_cast<std::size_t>(r.u64());
    e.exp.reward = r.f64();
    e.exp.next_state = read_map(r);
    const std::uint8_t flags = r.u8();
    e.exp.terminal = flags & 1;
    e.exp.truncated = flags & 2;
    e.exp.changed = flags & 4;
    const double label = r.f64();
    if (flags & 8) e.exp.stored_label = label;
    e.exp.priority_delta = r.f64();
    buf.entries_.push_back(std::move(e));
  }
  if (!r.at_end()) throw CheckpointError(path.string() + ": trailing bytes");
  if (buf.next_slot_ >= buf.capacity_) throw CheckpointError(path.string() + ": bad ring cursor");
  return buf;
}

}  // namespace pushsort
