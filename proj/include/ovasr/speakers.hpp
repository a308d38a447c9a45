#pragma once

#include <map>
#include <string>
#include <vector>

#include "ovasr/core.hpp"

namespace ovasr::spk {

enum class SelectMethod { kMean, kMedian, kMedoid, kLast };

SelectMethod select_method_from_string(const std::string& name);
std::string to_string(SelectMethod m);

struct SpeakerProfile {
  std::string id;
  std::vector<Embedding> history;  // ordered by utterance time
  double last_active_s = 0.0;
};

// Target-speaker embedding for a profile: MEAN/MEDIAN are renormalized;
// MEDOID minimizes mean cosine distance to the rest (ties to the earliest);
// LAST is the most recent utterance.
Embedding select_embedding(const SpeakerProfile& profile, SelectMethod method);

// Single-writer store of known speakers with recency tracking.
class SpeakerStore {
 public:
  explicit SpeakerStore(double accept_threshold = 0.6) : accept_threshold_(accept_threshold) {}

  // Matches `e` against each profile's most recent embedding; enrolls a new
  // speaker when nothing reaches the acceptance threshold. `hint_id` names
  // the speaker to enroll under when provided (ground-truth enrollment at
  // desk scale); otherwise ids are generated as spk0001, spk0002, ...
  std::string identify(const Embedding& e, double now_s, const std::string& hint_id = "");

  // Adds/refreshes a profile without the matching step (pre-enrollment).
  void enroll(const std::string& id, const Embedding& e, double now_s = 0.0);

  // Up to n speaker ids, most recently active first.
  std::vector<std::string> recent_speakers(int n) const;

  bool has(const std::string& id) const { return profiles_.count(id) > 0; }
  const SpeakerProfile& profile(const std::string& id) const;
  size_t size() const { return profiles_.size(); }
  double accept_threshold() const { return accept_threshold_; }
  std::vector<std::string> ids() const;

  // Snapshot as (id, LAST embedding) pairs plus a recency sidecar.
  void save(const std::string& embeddings_path, const std::string& recency_path) const;
  static SpeakerStore load(const std::string& embeddings_path, const std::string& recency_path,
                           double accept_threshold = 0.6);

 private:
  std::map<std::string, SpeakerProfile> profiles_;
  std::vector<std::string> recency_;  // most recent first
  double accept_threshold_;
  int next_id_ = 1;

  void touch(const std::string& id, double now_s);
};

}  // namespace ovasr::spk
