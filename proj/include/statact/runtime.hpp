#pragma once

#include <cstddef>
#include <functional>

namespace statact {

// Worker-thread cap used by cloud enumeration and Hausdorff scans.
// 0 restores the hardware default. Results are merge-order independent,
// so the thread count never changes any computed value; this knob exists
// so tests can pin it and prove that.
int max_threads();
void set_max_threads(int n);

// Splits [0, total) into contiguous chunks and runs fn(chunk_index, begin,
// end) on worker threads (inline when a single chunk suffices). The number
// of chunks is returned before any work starts via the chunks() callback so
// callers can size per-chunk output buffers.
void parallel_chunks(std::size_t total,
                     const std::function<void(std::size_t)>& chunks,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}
