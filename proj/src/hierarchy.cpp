#include "hiertag/hierarchy.hpp"

#include <json.hpp>
#include <unordered_set>

#include "hiertag/hash.hpp"

namespace hiertag {

namespace {
using ojson = nlohmann::ordered_json;
}

Hierarchy Hierarchy::parse(const std::string& json_text) {
  // ordered_json keeps document order but silently merges duplicate keys, so
  // repeated coarse names are caught with a parser callback instead.
  std::vector<std::string> top_keys;
  ojson doc;
  try {
    doc = ojson::parse(json_text, [&top_keys](int depth, ojson::parse_event_t event,
                                              ojson& parsed) {
      if (depth == 1 && event == ojson::parse_event_t::key) {
        top_keys.push_back(parsed.get<std::string>());
      }
      return true;
    });
  } catch (const ojson::parse_error& e) {
    throw MalformedDocument(std::string("hierarchy config: ") + e.what());
  }
  {
    std::unordered_set<std::string> seen;
    for (const auto& k : top_keys) {
      if (!seen.insert(k).second) {
        throw DuplicateName("coarse tag '" + k + "' defined more than once");
      }
    }
  }

  if (!doc.is_object()) {
    throw MalformedDocument("hierarchy config must be a JSON object");
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> groups;
  for (const auto& [coarse, value] : doc.items()) {
    if (!value.is_array()) {
      throw MalformedDocument("coarse tag '" + coarse +
                              "' must map to an array of fine tag names (2 levels only)");
    }
    std::vector<std::string> fines;
    for (const auto& el : value) {
      if (!el.is_string()) {
        throw MalformedDocument("coarse tag '" + coarse + "' contains a non-string entry");
      }
      fines.push_back(el.get<std::string>());
    }
    groups.emplace_back(coarse, std::move(fines));
  }
  return from_groups(groups);
}

Hierarchy Hierarchy::from_groups(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& groups) {
  Hierarchy h;
  for (const auto& [coarse, fines] : groups) {
    h.coarse_tags_.push_back(coarse);
    std::vector<int> idx;
    idx.reserve(fines.size());
    for (const auto& f : fines) {
      idx.push_back(h.n_fine());
      h.fine_tags_.push_back(f);
      h.parent_.push_back(h.n_coarse() - 1);
    }
    h.groups_.push_back(std::move(idx));
  }
  h.validate_and_index();
  return h;
}

void Hierarchy::validate_and_index() {
  if (coarse_tags_.empty()) {
    throw MalformedDocument("hierarchy must contain at least one coarse tag");
  }
  std::unordered_set<std::string> coarse_seen;
  for (const auto& c : coarse_tags_) {
    if (!coarse_seen.insert(c).second) {
      throw DuplicateName("coarse tag '" + c + "' defined more than once");
    }
  }
  for (int c = 0; c < n_coarse(); ++c) {
    if (groups_[c].empty()) {
      throw EmptyGroup("coarse tag '" + coarse_tags_[c] + "' has no fine tags");
    }
  }
  std::unordered_set<std::string> fine_seen;
  for (const auto& f : fine_tags_) {
    if (!fine_seen.insert(f).second) {
      throw DuplicateFineTag("fine tag '" + f + "' appears more than once");
    }
    if (coarse_seen.count(f)) {
      throw DuplicateName("tag name '" + f + "' used at both levels");
    }
  }
}

std::uint64_t Hierarchy::fingerprint() const { return fnv1a64(to_json()); }

std::string Hierarchy::to_json() const {
  ojson doc = ojson::object();
  for (int c = 0; c < n_coarse(); ++c) {
    ojson arr = ojson::array();
    for (int f : groups_[c]) arr.push_back(fine_tags_[f]);
    doc[coarse_tags_[c]] = std::move(arr);
  }
  return doc.dump();
}

std::vector<LabelState> induce_coarse_labels(std::span<const LabelState> fine_states,
                                             const Hierarchy& h) {
  if (static_cast<int>(fine_states.size()) != h.n_fine()) {
    throw LengthMismatch("fine state vector length does not match the hierarchy");
  }
  std::vector<LabelState> coarse(static_cast<std::size_t>(h.n_coarse()));
  for (int c = 0; c < h.n_coarse(); ++c) {
    bool any_positive = false;
    bool all_negative = true;
    for (int f : h.group(c)) {
      const LabelState s = fine_states[static_cast<std::size_t>(f)];
      if (s == LabelState::Positive) any_positive = true;
      if (s != LabelState::Negative) all_negative = false;
    }
    coarse[static_cast<std::size_t>(c)] = any_positive  ? LabelState::Positive
                                          : all_negative ? LabelState::Negative
                                                         : LabelState::Unobserved;
  }
  return coarse;
}

StateMatrix induce_coarse_rows(const StateMatrix& fine_rows, const Hierarchy& h) {
  if (fine_rows.cols() != h.n_fine()) {
    throw LengthMismatch("fine state matrix width does not match the hierarchy");
  }
  StateMatrix out(fine_rows.rows(), h.n_coarse());
  std::vector<LabelState> row(static_cast<std::size_t>(h.n_fine()));
  for (int i = 0; i < fine_rows.rows(); ++i) {
    for (int f = 0; f < h.n_fine(); ++f) row[static_cast<std::size_t>(f)] = fine_rows(i, f);
    const auto coarse = induce_coarse_labels(row, h);
    for (int c = 0; c < h.n_coarse(); ++c) out(i, c) = coarse[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace hiertag
