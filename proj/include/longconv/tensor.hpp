#pragma once

// Dense tensor with reverse-mode autodiff tape. Scalar type is a template
// parameter: float for training, double for gradient-check suites.

#include <atomic>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace longconv {

class TensorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Allocation tracking (feeds the profiler's peak-memory axis)
// ---------------------------------------------------------------------------

class MemoryTracker {
 public:
  static MemoryTracker& instance() {
    static MemoryTracker tracker;
    return tracker;
  }

  void add(std::int64_t bytes) {
    std::int64_t live = live_.fetch_add(bytes, std::memory_order_relaxed) + bytes;
    std::int64_t peak = peak_.load(std::memory_order_relaxed);
    while (live > peak &&
           !peak_.compare_exchange_weak(peak, live, std::memory_order_relaxed)) {
    }
  }
  void sub(std::int64_t bytes) { live_.fetch_sub(bytes, std::memory_order_relaxed); }

  std::int64_t live_bytes() const { return live_.load(std::memory_order_relaxed); }
  std::int64_t peak_bytes() const { return peak_.load(std::memory_order_relaxed); }
  void reset_peak() { peak_.store(live_bytes(), std::memory_order_relaxed); }

 private:
  std::atomic<std::int64_t> live_{0};
  std::atomic<std::int64_t> peak_{0};
};

template <typename T>
struct CountingAllocator {
  using value_type = T;
  CountingAllocator() = default;
  template <typename U>
  CountingAllocator(const CountingAllocator<U>&) {}

  T* allocate(std::size_t n) {
    MemoryTracker::instance().add(static_cast<std::int64_t>(n * sizeof(T)));
    return static_cast<T*>(::operator new(n * sizeof(T)));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    MemoryTracker::instance().sub(static_cast<std::int64_t>(n * sizeof(T)));
    ::operator delete(p);
  }
  bool operator==(const CountingAllocator&) const { return true; }
  bool operator!=(const CountingAllocator&) const { return false; }
};

template <typename S>
using TrackedVec = std::vector<S, CountingAllocator<S>>;

// ---------------------------------------------------------------------------
// Shape helpers
// ---------------------------------------------------------------------------

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Dimensions must be >= 1; a zero is tolerated only on a time axis so that
// empty-batch edges stay representable.
inline void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d < 0) throw TensorError("negative dimension in shape " + shape_str(shape));
  }
}

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

template <typename S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using VecMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>;
template <typename S>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>;

// Handle with shared storage; copying shares the buffer, clone() deep-copies.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return Tensor(std::move(shape), requires_grad);
  }

  static Tensor full(Shape shape, S value, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    std::fill(t.data(), t.data() + t.numel(), value);
    return t;
  }

  static Tensor scalar(S value) {
    Tensor t(Shape{1}, false);
    t.data()[0] = value;
    return t;
  }

  static Tensor from(Shape shape, std::initializer_list<S> values, bool requires_grad = false) {
    return from(std::move(shape), std::vector<S>(values), requires_grad);
  }

  static Tensor from(Shape shape, const std::vector<S>& values, bool requires_grad = false) {
    Tensor t(std::move(shape), requires_grad);
    if (static_cast<std::int64_t>(values.size()) != t.numel())
      throw TensorError("value count " + std::to_string(values.size()) +
                        " does not match shape " + shape_str(t.shape()));
    std::copy(values.begin(), values.end(), t.data());
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t rank() const { return static_cast<std::int64_t>(impl_->shape.size()); }
  std::int64_t dim(std::int64_t i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  S* data() { return impl_->data.data(); }
  const S* data() const { return impl_->data.data(); }
  S& operator[](std::int64_t i) { return impl_->data[static_cast<std::size_t>(i)]; }
  S operator[](std::int64_t i) const { return impl_->data[static_cast<std::size_t>(i)]; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  bool grad_allocated() const { return !impl_->grad.empty(); }
  void ensure_grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), S(0));
  }
  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), S(0));
  }
  S* grad() {
    ensure_grad();
    return impl_->grad.data();
  }
  const S* grad_data() const {
    if (impl_->grad.empty()) throw TensorError("gradient not allocated");
    return impl_->grad.data();
  }

  Tensor clone() const {
    Tensor t(impl_->shape, impl_->requires_grad);
    std::copy(impl_->data.begin(), impl_->data.end(), t.data());
    return t;
  }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  // Eigen views over the flat row-major buffer.
  MatMap<S> mat(std::int64_t rows, std::int64_t cols) { return MatMap<S>(data(), rows, cols); }
  ConstMatMap<S> mat(std::int64_t rows, std::int64_t cols) const {
    return ConstMatMap<S>(data(), rows, cols);
  }
  MatMap<S> mat() { return mat(dim(0), rank() == 1 ? 1 : numel() / dim(0)); }
  ConstMatMap<S> mat() const { return mat(dim(0), rank() == 1 ? 1 : numel() / dim(0)); }
  VecMap<S> vec() { return VecMap<S>(data(), numel()); }
  ConstVecMap<S> vec() const { return ConstVecMap<S>(data(), numel()); }
  MatMap<S> grad_mat(std::int64_t rows, std::int64_t cols) {
    return MatMap<S>(grad(), rows, cols);
  }
  VecMap<S> grad_vec() { return VecMap<S>(grad(), numel()); }

 private:
  struct Impl {
    Shape shape;
    TrackedVec<S> data;
    TrackedVec<S> grad;
    bool requires_grad = false;
  };

  Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<Impl>()) {
    check_shape(shape);
    impl_->shape = std::move(shape);
    impl_->data.assign(static_cast<std::size_t>(shape_numel(impl_->shape)), S(0));
    impl_->requires_grad = requires_grad;
  }

  std::shared_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Tape: define-by-run record of backward rules, rebuilt every step
// ---------------------------------------------------------------------------

template <typename S>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(Tensor<S> output, BackwardFn fn) {
    outputs_.push_back(std::move(output));
    nodes_.push_back(std::move(fn));
  }
  std::size_t size() const { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    outputs_.clear();
  }

  // Nodes were recorded in topological order, so one reverse sweep visits
  // each exactly once. Intermediate (recorded-output) grads are reset per
  // call; leaf grads accumulate, so calling twice without zeroing doubles.
  void backward(Tensor<S>& loss) {
    if (!loss.defined() || loss.numel() != 1)
      throw TensorError("backward requires a scalar loss");
    for (auto& out : outputs_) out.zero_grad();
    loss.grad()[0] += S(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  }

 private:
  std::vector<BackwardFn> nodes_;
  std::vector<Tensor<S>> outputs_;
};

template <typename S>
inline Tape<S>*& active_tape() {
  thread_local Tape<S>* tape = nullptr;
  return tape;
}

// RAII recording scope; ops executed inside land on this tape.
template <typename S>
class TapeScope {
 public:
  explicit TapeScope(Tape<S>& tape) : prev_(active_tape<S>()) { active_tape<S>() = &tape; }
  ~TapeScope() { active_tape<S>() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<S>* prev_;
};

template <typename S>
inline void backward(Tape<S>& tape, Tensor<S>& loss) {
  tape.backward(loss);
}

}  // namespace longconv
