#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "smc2/rng.hpp"

namespace smc2 {

/// How a time slice (or a run of slices) was generated.
enum class StepTag : std::uint8_t {
  InitPF,     ///< time-0 slice of an unconditional filter
  ExtendPF,   ///< one unconditional step t-1 -> t
  FreshPF,    ///< whole unconditional pass 0..t from one stream (PMMH proposal, exchange)
  CsmcRegen,  ///< whole conditional pass 0..t around the pinned trajectory
};

std::string_view to_string(StepTag tag);
StepTag step_tag_from_string(std::string_view name);

struct SliceRecord {
  RngState rng_before;
  StepTag tag = StepTag::InitPF;
  std::uint32_t n_x = 0;
  std::uint32_t time_index = 0;

  friend bool operator==(const SliceRecord&, const SliceRecord&) = default;
};

/// Minimal record from which an island's full particle history
/// (x_{0:t}, a_{1:t}) can be regenerated bit-exactly.
///
/// Layout: one base record (InitPF at 0, or a FreshPF / CsmcRegen pass ending
/// at some t0) followed by ExtendPF records for t0+1, t0+2, ... The pinned
/// trajectory is kept only while the base is CsmcRegen.
class SliceJournal {
 public:
  /// Appends or resets according to the record's tag. `pinned` must be given
  /// for CsmcRegen (length (t0+1)*state_dim) and must be empty otherwise.
  /// Throws JournalError on an inconsistent time index or n_x.
  void record(const SliceRecord& record, std::vector<double> pinned = {});

  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }
  std::span<const SliceRecord> records() const noexcept { return records_; }
  const SliceRecord& base() const;
  /// Time of the base pass's last slice (0 for InitPF).
  std::size_t base_time() const { return base().time_index; }
  /// Time index of the newest slice.
  std::size_t last_time() const;
  std::size_t n_x() const { return base().n_x; }

  bool has_pinned() const noexcept { return !pinned_.empty(); }
  const std::vector<double>& pinned_trajectory() const noexcept { return pinned_; }

  /// Heap bytes owned by the journal.
  std::size_t footprint_bytes() const noexcept;

  nlohmann::json to_json() const;
  static SliceJournal from_json(const nlohmann::json& j);

  friend bool operator==(const SliceJournal&, const SliceJournal&) = default;

 private:
  std::vector<SliceRecord> records_;
  std::vector<double> pinned_;
};

/// Functional form of SliceJournal::record.
SliceJournal record_slice(SliceJournal journal, const SliceRecord& record, std::vector<double> pinned = {});

inline constexpr int kJournalFormatVersion = 1;

}  // namespace smc2
