#include "smc2/journal.hpp"

#include <array>
#include <string>

#include "smc2/errors.hpp"

namespace smc2 {

namespace {

constexpr std::array<std::string_view, 4> kTagNames = {"InitPF", "ExtendPF", "FreshPF", "CsmcRegen"};

std::string corruption(const std::string& what) { return "journal corruption: " + what; }

}  // namespace

std::string_view to_string(StepTag tag) { return kTagNames.at(static_cast<std::size_t>(tag)); }

StepTag step_tag_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (kTagNames[i] == name) return static_cast<StepTag>(i);
  }
  throw JournalError(corruption("unknown step tag '" + std::string(name) + "'"));
}

void SliceJournal::record(const SliceRecord& rec, std::vector<double> pinned) {
  if (rec.n_x == 0) throw JournalError(corruption("n_x must be positive"));
  switch (rec.tag) {
    case StepTag::InitPF:
      if (!records_.empty()) throw JournalError(corruption("InitPF on a non-empty journal"));
      if (rec.time_index != 0) throw JournalError(corruption("InitPF must be at time 0"));
      if (!pinned.empty()) throw JournalError(corruption("InitPF takes no pinned trajectory"));
      records_.push_back(rec);
      return;
    case StepTag::ExtendPF:
      if (records_.empty()) throw JournalError(corruption("ExtendPF on an empty journal"));
      if (rec.time_index != last_time() + 1) {
        throw JournalError(corruption("ExtendPF at t=" + std::to_string(rec.time_index) + " after t=" +
                                      std::to_string(last_time())));
      }
      if (rec.n_x != n_x()) throw JournalError(corruption("ExtendPF changes n_x"));
      if (!pinned.empty()) throw JournalError(corruption("ExtendPF takes no pinned trajectory"));
      records_.push_back(rec);
      return;
    case StepTag::FreshPF:
      if (!pinned.empty()) throw JournalError(corruption("FreshPF takes no pinned trajectory"));
      records_.clear();
      pinned_.clear();
      pinned_.shrink_to_fit();
      records_.push_back(rec);
      return;
    case StepTag::CsmcRegen:
      if (pinned.empty() || pinned.size() % (static_cast<std::size_t>(rec.time_index) + 1) != 0) {
        throw JournalError(corruption("CsmcRegen needs a pinned trajectory of length t+1"));
      }
      if (rec.n_x < 2) throw JournalError(corruption("CsmcRegen needs n_x >= 2"));
      records_.clear();
      records_.push_back(rec);
      pinned_ = std::move(pinned);
      return;
  }
  throw JournalError(corruption("invalid step tag"));
}

const SliceRecord& SliceJournal::base() const {
  if (records_.empty()) throw JournalError(corruption("empty journal"));
  return records_.front();
}

std::size_t SliceJournal::last_time() const {
  if (records_.empty()) throw JournalError(corruption("empty journal"));
  return records_.back().time_index;
}

std::size_t SliceJournal::footprint_bytes() const noexcept {
  return records_.capacity() * sizeof(SliceRecord) + pinned_.capacity() * sizeof(double);
}

nlohmann::json SliceJournal::to_json() const {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records_) {
    nlohmann::json words = nlohmann::json::array();
    for (auto w : r.rng_before.words) words.push_back(w);
    recs.push_back({{"tag", to_string(r.tag)}, {"t", r.time_index}, {"n_x", r.n_x}, {"rng", words}});
  }
  return {{"version", kJournalFormatVersion}, {"records", recs}, {"pinned", pinned_}};
}

SliceJournal SliceJournal::from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kJournalFormatVersion) {
      throw JournalError(corruption("unsupported journal version"));
    }
    SliceJournal out;
    const auto& recs = j.at("records");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      SliceRecord rec;
      rec.tag = step_tag_from_string(r.at("tag").get<std::string>());
      rec.time_index = r.at("t").get<std::uint32_t>();
      rec.n_x = r.at("n_x").get<std::uint32_t>();
      const auto& words = r.at("rng");
      if (words.size() != rec.rng_before.words.size()) throw JournalError(corruption("bad rng state"));
      for (std::size_t w = 0; w < words.size(); ++w) rec.rng_before.words[w] = words[w].get<std::uint64_t>();
      std::vector<double> pinned;
      if (i == 0 && rec.tag == StepTag::CsmcRegen) pinned = j.at("pinned").get<std::vector<double>>();
      out.record(rec, std::move(pinned));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw JournalError(corruption(e.what()));
  }
}

SliceJournal record_slice(SliceJournal journal, const SliceRecord& record, std::vector<double> pinned) {
  journal.record(record, std::move(pinned));
  return journal;
}

}  // namespace smc2
