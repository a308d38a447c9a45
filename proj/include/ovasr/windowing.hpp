#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ovasr::win {

// Stream-window geometry: analysis windows of window_s seconds advance by
// operation_s seconds, so consecutive windows share edge_s of context on
// each side. Only the central operation region of each window is kept when
// outputs are stitched back together.
struct WindowingConfig {
  double window_s = 15.0;
  double edge_s = 3.0;
  double operation_s = 9.0;
  int frame_rate = 50;

  int64_t window_frames() const { return static_cast<int64_t>(window_s * frame_rate + 0.5); }
  int64_t edge_frames() const { return static_cast<int64_t>(edge_s * frame_rate + 0.5); }
  int64_t operation_frames() const { return static_cast<int64_t>(operation_s * frame_rate + 0.5); }
  void validate() const;
};

struct WindowSpan {
  int index = 0;
  int64_t start = 0;  // global frame of the first window frame
  int64_t end = 0;    // exclusive; clipped at stream end
  // Output region this window contributes during aggregation. The regions
  // of consecutive windows partition [0, stream_len).
  int64_t emit_start = 0;
  int64_t emit_end = 0;
};

// Windows covering a stream of `frames` frames. The last window is the first
// one whose coverage reaches the final frame.
std::vector<WindowSpan> plan_windows(int64_t frames, const WindowingConfig& cfg);

// Slices per-frame payloads into windows.
template <typename T>
std::vector<std::vector<T>> unfold(const std::vector<T>& stream, const WindowingConfig& cfg) {
  auto spans = plan_windows(static_cast<int64_t>(stream.size()), cfg);
  std::vector<std::vector<T>> out;
  out.reserve(spans.size());
  for (const auto& w : spans)
    out.emplace_back(stream.begin() + w.start, stream.begin() + w.end);
  return out;
}

// Inverse of unfold for per-frame outputs: every output frame is taken from
// exactly one window (its emit region).
template <typename T>
std::vector<T> aggregate(const std::vector<std::vector<T>>& windows, int64_t frames,
                         const WindowingConfig& cfg) {
  auto spans = plan_windows(frames, cfg);
  if (windows.size() != spans.size())
    throw std::invalid_argument("aggregate: window count inconsistent with config");
  std::vector<T> out(static_cast<size_t>(frames));
  for (const auto& w : spans) {
    if (static_cast<int64_t>(windows[w.index].size()) != w.end - w.start)
      throw std::invalid_argument("aggregate: window length inconsistent with config");
    for (int64_t t = w.emit_start; t < w.emit_end; ++t)
      out[static_cast<size_t>(t)] = windows[w.index][static_cast<size_t>(t - w.start)];
  }
  return out;
}

}  // namespace ovasr::win
