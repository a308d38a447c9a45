#include "ovasr/windowing.hpp"

#include <cmath>

namespace ovasr::win {

void WindowingConfig::validate() const {
  if (window_s <= 0 || edge_s <= 0 || operation_s <= 0 || frame_rate <= 0)
    throw std::invalid_argument("windowing: all parameters must be positive");
  if (std::abs(window_s - (operation_s + 2.0 * edge_s)) > 1e-9)
    throw std::invalid_argument("windowing: window_s must equal operation_s + 2*edge_s");
  double wf = window_s * frame_rate;
  if (std::abs(wf - std::round(wf)) > 1e-9)
    throw std::invalid_argument("windowing: window_s * frame_rate must be integral");
  double ef = edge_s * frame_rate;
  if (std::abs(ef - std::round(ef)) > 1e-9)
    throw std::invalid_argument("windowing: edge_s * frame_rate must be integral");
}

std::vector<WindowSpan> plan_windows(int64_t frames, const WindowingConfig& cfg) {
  cfg.validate();
  if (frames <= 0) throw std::invalid_argument("plan_windows: empty stream");
  const int64_t win = cfg.window_frames();
  const int64_t hop = cfg.operation_frames();
  const int64_t edge = cfg.edge_frames();

  int64_t count = 1;
  if (frames > win) count += (frames - win + hop - 1) / hop;

  std::vector<WindowSpan> out;
  out.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    WindowSpan w;
    w.index = static_cast<int>(i);
    w.start = i * hop;
    w.end = std::min(frames, w.start + win);
    w.emit_start = (i == 0) ? 0 : w.start + edge;
    w.emit_end = (i == count - 1) ? frames : w.start + edge + hop;
    out.push_back(w);
  }
  return out;
}

}  // namespace ovasr::win
