#include "ovasr/speakers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ovasr::spk {

SelectMethod select_method_from_string(const std::string& name) {
  if (name == "mean" || name == "MEAN") return SelectMethod::kMean;
  if (name == "median" || name == "MEDIAN") return SelectMethod::kMedian;
  if (name == "medoid" || name == "MEDOID") return SelectMethod::kMedoid;
  if (name == "last" || name == "LAST") return SelectMethod::kLast;
  throw std::invalid_argument("unknown embedding selection method: " + name);
}

std::string to_string(SelectMethod m) {
  switch (m) {
    case SelectMethod::kMean: return "mean";
    case SelectMethod::kMedian: return "median";
    case SelectMethod::kMedoid: return "medoid";
    case SelectMethod::kLast: return "last";
  }
  return "?";
}

Embedding select_embedding(const SpeakerProfile& profile, SelectMethod method) {
  const auto& h = profile.history;
  if (h.empty()) throw std::invalid_argument("select_embedding: empty history");
  switch (method) {
    case SelectMethod::kLast:
      return h.back();
    case SelectMethod::kMean: {
      Embedding m(h[0].size(), 0.0);
      for (const auto& e : h)
        for (size_t d = 0; d < m.size(); ++d) m[d] += e[d];
      for (double& v : m) v /= static_cast<double>(h.size());
      return normalized(std::move(m));
    }
    case SelectMethod::kMedian: {
      Embedding m(h[0].size(), 0.0);
      std::vector<double> col(h.size());
      for (size_t d = 0; d < m.size(); ++d) {
        for (size_t i = 0; i < h.size(); ++i) col[i] = h[i][d];
        std::sort(col.begin(), col.end());
        size_t n = col.size();
        m[d] = (n % 2) ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
      }
      return normalized(std::move(m));
    }
    case SelectMethod::kMedoid: {
      // smallest mean cosine distance to the others; ties go to the earliest
      size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < h.size(); ++i) {
        double sum = 0.0;
        for (size_t j = 0; j < h.size(); ++j) {
          if (i == j) continue;
          sum += 1.0 - dot(h[i], h[j]);
        }
        double mean = h.size() > 1 ? sum / static_cast<double>(h.size() - 1) : 0.0;
        if (mean < best_d - 1e-15) {
          best_d = mean;
          best = i;
        }
      }
      return h[best];
    }
  }
  throw std::logic_error("select_embedding: unreachable");
}

const SpeakerProfile& SpeakerStore::profile(const std::string& id) const {
  auto it = profiles_.find(id);
  if (it == profiles_.end()) throw std::invalid_argument("unknown speaker: " + id);
  return it->second;
}

std::vector<std::string> SpeakerStore::ids() const {
  std::vector<std::string> out;
  out.reserve(profiles_.size());
  for (const auto& [id, _] : profiles_) out.push_back(id);
  return out;
}

void SpeakerStore::touch(const std::string& id, double now_s) {
  profiles_[id].last_active_s = now_s;
  auto it = std::find(recency_.begin(), recency_.end(), id);
  if (it != recency_.end()) recency_.erase(it);
  recency_.insert(recency_.begin(), id);
}

void SpeakerStore::enroll(const std::string& id, const Embedding& e, double now_s) {
  Embedding u = normalized(e);
  auto it = profiles_.find(id);
  if (it == profiles_.end()) {
    SpeakerProfile p;
    p.id = id;
    p.history.push_back(std::move(u));
    profiles_[id] = std::move(p);
    recency_.push_back(id);  // enrolled but not yet active: back of the line
    profiles_[id].last_active_s = now_s;
  } else {
    it->second.history.push_back(std::move(u));
    touch(id, now_s);
  }
}

std::string SpeakerStore::identify(const Embedding& e, double now_s,
                                   const std::string& hint_id) {
  Embedding u = normalized(e);
  std::string best_id;
  double best_sim = -2.0;
  for (const auto& [id, p] : profiles_) {
    double sim = dot(u, select_embedding(p, SelectMethod::kLast));
    if (sim > best_sim) {
      best_sim = sim;
      best_id = id;
    }
  }
  if (!best_id.empty() && best_sim >= accept_threshold_) {
    profiles_[best_id].history.push_back(std::move(u));
    touch(best_id, now_s);
    return best_id;
  }
  std::string id = hint_id;
  if (id.empty()) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "spk%04d", next_id_++);
    id = buf;
  }
  SpeakerProfile p;
  p.id = id;
  p.history.push_back(std::move(u));
  profiles_[id] = std::move(p);
  touch(id, now_s);
  return id;
}

std::vector<std::string> SpeakerStore::recent_speakers(int n) const {
  if (n < 1) throw std::invalid_argument("recent_speakers: n must be >= 1");
  std::vector<std::string> out;
  for (const auto& id : recency_) {
    if (static_cast<int>(out.size()) >= n) break;
    out.push_back(id);
  }
  return out;
}

void SpeakerStore::save(const std::string& embeddings_path,
                        const std::string& recency_path) const {
  std::vector<std::pair<std::string, Embedding>> embs;
  for (const auto& id : recency_)
    embs.push_back({id, select_embedding(profiles_.at(id), SelectMethod::kLast)});
  write_embeddings(embs, embeddings_path);
  std::ofstream out(recency_path);
  if (!out) throw std::runtime_error("cannot write recency file: " + recency_path);
  for (const auto& id : recency_)
    out << id << '\t' << format_time(profiles_.at(id).last_active_s) << '\n';
}

SpeakerStore SpeakerStore::load(const std::string& embeddings_path,
                                const std::string& recency_path, double accept_threshold) {
  SpeakerStore store(accept_threshold);
  auto embs = read_embeddings(embeddings_path);
  for (const auto& [id, e] : embs) store.enroll(id, e);
  std::ifstream in(recency_path);
  if (in) {
    std::string line;
    std::vector<std::pair<std::string, double>> rec;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw std::runtime_error("recency file: missing tab in line '" + line + "'");
      rec.push_back({line.substr(0, tab), std::stod(line.substr(tab + 1))});
    }
    store.recency_.clear();
    for (const auto& [id, t] : rec) {
      if (!store.has(id)) throw std::runtime_error("recency file: unknown speaker " + id);
      store.profiles_[id].last_active_s = t;
      store.recency_.push_back(id);
    }
  }
  return store;
}

}  // namespace ovasr::spk
