#pragma once

#include <cassert>
#include <cstddef>
#include <utility>
#include <vector>

namespace olu {

/// Fixed-capacity FIFO. Index 0 is the oldest element; pushing into a full
/// buffer overwrites it.
template <typename T>
class RingBuffer {
 public:
  RingBuffer() = default;
  explicit RingBuffer(std::size_t capacity) : slots_(capacity) {}

  std::size_t capacity() const noexcept { return slots_.size(); }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  bool full() const noexcept { return size_ == slots_.size(); }

  const T& operator[](std::size_t i) const {
    assert(i < size_);
    return slots_[(head_ + i) % slots_.size()];
  }
  const T& oldest() const { return (*this)[0]; }
  const T& newest() const { return (*this)[size_ - 1]; }

  /// Returns true when an element was evicted.
  bool push(T value) {
    if (slots_.empty()) return false;
    if (full()) {
      slots_[head_] = std::move(value);
      head_ = (head_ + 1) % slots_.size();
      return true;
    }
    slots_[(head_ + size_) % slots_.size()] = std::move(value);
    ++size_;
    return false;
  }

  void clear() noexcept {
    head_ = 0;
    size_ = 0;
  }

  /// Removes matching elements, keeping the survivors' order. Returns the
  /// number removed.
  template <typename Pred>
  std::size_t erase_if(Pred pred) {
    std::vector<T> keep;
    keep.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) {
      if (!pred((*this)[i])) keep.push_back((*this)[i]);
    }
    const std::size_t removed = size_ - keep.size();
    clear();
    for (auto& v : keep) push(std::move(v));
    return removed;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < size_; ++i) f((*this)[i]);
  }

 private:
  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace olu
