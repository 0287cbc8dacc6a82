#ifndef MAADA_TAPE_HPP
#define MAADA_TAPE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "maada/matrix.hpp"

namespace maada {

// Reverse-mode autodiff over a fixed set of dense primitives. A Tape is a
// flat list of nodes in construction order, which is also a topological
// order: every operand id precedes its consumer. Shapes are fixed when a
// node is appended, so all dimension errors surface at build time (or when
// a binding disagrees with its declared slot).
//
// Evaluation is pure and sequential; gradient accumulation follows tape
// order, so repeated runs on the same inputs are bitwise identical.
class Tape {
 public:
  using Id = std::int32_t;

  enum class Op : std::uint8_t {
    kInput,
    kConstant,
    kMatMul,
    kTranspose,
    kAdd,
    kSub,
    kMul,       // elementwise
    kScale,     // by a fixed scalar
    kExp,
    kLog,
    kRelu,      // elementwise max with zero; subgradient at 0 is 0
    kSquare,
    kRowSum,    // r x c -> r x 1
    kRowMax,    // r x c -> r x 1; subgradient to the first argmax
    kBroadcastCol,  // r x 1 -> r x c
    kBroadcastRow,  // 1 x c -> r x c
    kPick,      // r x c -> r x 1, one fixed column index per row
    kSum,       // -> 1 x 1
    kMean,      // -> 1 x 1
  };

  struct Node {
    Op op;
    Id a = -1;
    Id b = -1;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double scalar = 0.0;         // kScale factor
    std::vector<int> picks;      // kPick column per row
    std::string name;            // kInput
    Matrix value;                // kConstant
  };

  // Named leaf bound at evaluation time. Names must be unique per tape.
  Id input(const std::string& name, std::size_t rows, std::size_t cols);
  Id constant(Matrix value);

  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id a, double factor);
  Id exp(Id a);
  Id log(Id a);
  Id relu(Id a);
  Id square(Id a);
  Id row_sum(Id a);
  Id row_max(Id a);
  Id broadcast_col(Id a, std::size_t cols);
  Id broadcast_row(Id a, std::size_t rows);
  Id pick(Id a, std::vector<int> columns);
  Id sum(Id a);
  Id mean(Id a);

  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t rows(Id id) const { return node(id).rows; }
  std::size_t cols(Id id) const { return node(id).cols; }

 private:
  friend class TapeRun;
  Id push(Node node);
  const Node& check(Id id, const char* op) const;

  std::vector<Node> nodes_;
};

using Bindings = std::map<std::string, Matrix>;

// Forward pass over the ancestors of `output`. Every produced value is
// checked finite; a NaN/Inf raises EvalError naming the offending op.
Matrix forward_eval(const Tape& tape, Tape::Id output, const Bindings& inputs);

// Holds all node values from one forward pass so several node values (loss
// components, say) can be read from a single evaluation.
class TapeRun {
 public:
  TapeRun(const Tape& tape, Tape::Id output, const Bindings& inputs);

  const Matrix& value(Tape::Id id) const;
  double scalar(Tape::Id id) const;

  // Reverse sweep from the (scalar) output; returns gradients for the named
  // input subset. Unknown names raise ContractError.
  std::map<std::string, Matrix> gradients(const std::vector<std::string>& wrt) const;

 private:
  const Tape& tape_;
  Tape::Id output_;
  std::vector<Matrix> values_;
  std::vector<char> live_;  // ancestry mask of `output`
};

// Gradient of a scalar-valued tape with respect to the named inputs.
std::map<std::string, Matrix> backward_grad(const Tape& tape, Tape::Id output,
                                            const Bindings& inputs,
                                            const std::vector<std::string>& wrt);

// Central finite differences, one coordinate at a time. Verification oracle
// for backward_grad; never used on the implementation path it checks.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& fn, const Matrix& x,
                        double step);

}  // namespace maada

#endif
