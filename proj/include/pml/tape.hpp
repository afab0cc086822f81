#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace pml::ad {

template <typename Scalar>
class Tape;

/// Scalar recorded on a Tape. Variables without a tape (or with
/// index == npos) are constants.
template <typename Scalar>
class Var {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Var() = default;
  Var(Scalar value) : value_(value) {}  // NOLINT: constants convert implicitly

  Scalar value() const { return value_; }
  std::size_t index() const { return index_; }
  Tape<Scalar>* tape() const { return tape_; }
  bool is_constant() const { return index_ == npos; }

 private:
  friend class Tape<Scalar>;
  Var(Scalar value, std::size_t index, Tape<Scalar>* tape)
      : value_(value), index_(index), tape_(tape) {}

  Scalar value_{};
  std::size_t index_ = npos;
  Tape<Scalar>* tape_ = nullptr;
};

/// Linear record of scalar operations; each node keeps at most two parents
/// and the local partials towards them. Reverse sweep accumulates adjoints.
template <typename Scalar>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> variable(Scalar value) { return push(value, {}, Scalar(0), {}, Scalar(0)); }

  static Var<Scalar> constant(Scalar value) { return Var<Scalar>(value); }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Adjoints d(output)/d(node) for every node recorded so far.
  std::vector<Scalar> backward(const Var<Scalar>& output) const {
    std::vector<Scalar> adjoint(nodes_.size(), Scalar(0));
    if (output.is_constant()) return adjoint;
    adjoint[output.index()] = Scalar(1);
    for (std::size_t k = output.index() + 1; k-- > 0;) {
      const Node& n = nodes_[k];
      const Scalar a = adjoint[k];
      if (a == Scalar(0)) continue;
      if (n.lhs != Var<Scalar>::npos) adjoint[n.lhs] += a * n.dlhs;
      if (n.rhs != Var<Scalar>::npos) adjoint[n.rhs] += a * n.drhs;
    }
    return adjoint;
  }

  // Records a node whose value depends on up to two operands. Constant
  // operands are dropped; a node with no live operand stays a constant.
  static Var<Scalar> record(Scalar value, const Var<Scalar>& lhs, Scalar dlhs,
                            const Var<Scalar>& rhs, Scalar drhs) {
    Tape* tape = lhs.tape() ? lhs.tape() : rhs.tape();
    if (!tape) return Var<Scalar>(value);
    return tape->push(value, lhs, dlhs, rhs, drhs);
  }

 private:
  struct Node {
    std::size_t lhs;
    std::size_t rhs;
    Scalar dlhs;
    Scalar drhs;
  };

  Var<Scalar> push(Scalar value, const Var<Scalar>& lhs, Scalar dlhs, const Var<Scalar>& rhs,
                   Scalar drhs) {
    nodes_.push_back({lhs.index(), rhs.index(), dlhs, drhs});
    return Var<Scalar>(value, nodes_.size() - 1, this);
  }

  std::vector<Node> nodes_;
};

template <typename S>
Var<S> operator+(const Var<S>& a, const Var<S>& b) {
  return Tape<S>::record(a.value() + b.value(), a, S(1), b, S(1));
}
template <typename S>
Var<S> operator-(const Var<S>& a, const Var<S>& b) {
  return Tape<S>::record(a.value() - b.value(), a, S(1), b, S(-1));
}
template <typename S>
Var<S> operator*(const Var<S>& a, const Var<S>& b) {
  return Tape<S>::record(a.value() * b.value(), a, b.value(), b, a.value());
}
template <typename S>
Var<S> operator/(const Var<S>& a, const Var<S>& b) {
  const S inv = S(1) / b.value();
  return Tape<S>::record(a.value() * inv, a, inv, b, -a.value() * inv * inv);
}
template <typename S>
Var<S> operator-(const Var<S>& a) {
  return Tape<S>::record(-a.value(), a, S(-1), Var<S>(), S(0));
}

// Mixed scalar/variable overloads; plain scalars act as constants.
#define PML_AD_MIXED(op)                                                                \
  template <typename S>                                                                 \
  Var<S> operator op(const Var<S>& a, S b) { return a op Var<S>(b); }                    \
  template <typename S>                                                                 \
  Var<S> operator op(S a, const Var<S>& b) { return Var<S>(a) op b; }
PML_AD_MIXED(+)
PML_AD_MIXED(-)
PML_AD_MIXED(*)
PML_AD_MIXED(/)
#undef PML_AD_MIXED

template <typename S>
Var<S> tanh(const Var<S>& a) {
  const S t = std::tanh(a.value());
  return Tape<S>::record(t, a, S(1) - t * t, Var<S>(), S(0));
}

template <typename S>
Var<S> log(const Var<S>& a) {
  return Tape<S>::record(std::log(a.value()), a, S(1) / a.value(), Var<S>(), S(0));
}

/// d|x|/dx := 0 at x = 0.
template <typename S>
Var<S> abs(const Var<S>& a) {
  const S x = a.value();
  const S slope = x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0));
  return Tape<S>::record(std::abs(x), a, slope, Var<S>(), S(0));
}

/// Ties send the whole gradient to the first argument.
template <typename S>
Var<S> max(const Var<S>& a, const Var<S>& b) {
  const bool first = !(a.value() < b.value());
  return Tape<S>::record(first ? a.value() : b.value(), a, first ? S(1) : S(0), b,
                         first ? S(0) : S(1));
}
template <typename S>
Var<S> max(const Var<S>& a, S b) {
  return max(a, Var<S>(b));
}
template <typename S>
Var<S> max(S a, const Var<S>& b) {
  return max(Var<S>(a), b);
}

}  // namespace pml::ad
