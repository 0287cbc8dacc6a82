#include "maada/tape.hpp"

#include <algorithm>
#include <cmath>

namespace maada {

namespace {

const char* op_name(Tape::Op op) {
  switch (op) {
    case Tape::Op::kInput: return "input";
    case Tape::Op::kConstant: return "constant";
    case Tape::Op::kMatMul: return "matmul";
    case Tape::Op::kTranspose: return "transpose";
    case Tape::Op::kAdd: return "add";
    case Tape::Op::kSub: return "sub";
    case Tape::Op::kMul: return "mul";
    case Tape::Op::kScale: return "scale";
    case Tape::Op::kExp: return "exp";
    case Tape::Op::kLog: return "log";
    case Tape::Op::kRelu: return "relu";
    case Tape::Op::kSquare: return "square";
    case Tape::Op::kRowSum: return "row_sum";
    case Tape::Op::kRowMax: return "row_max";
    case Tape::Op::kBroadcastCol: return "broadcast_col";
    case Tape::Op::kBroadcastRow: return "broadcast_row";
    case Tape::Op::kPick: return "pick";
    case Tape::Op::kSum: return "sum";
    case Tape::Op::kMean: return "mean";
  }
  return "?";
}

}  // namespace

const Tape::Node& Tape::check(Id id, const char* op) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ContractError(std::string(op) + ": operand id out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

Tape::Id Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(const std::string& name, std::size_t rows, std::size_t cols) {
  for (const Node& n : nodes_) {
    if (n.op == Op::kInput && n.name == name) {
      throw ContractError("input: duplicate name '" + name + "'");
    }
  }
  Node n;
  n.op = Op::kInput;
  n.rows = rows;
  n.cols = cols;
  n.name = name;
  return push(std::move(n));
}

Tape::Id Tape::constant(Matrix value) {
  Node n;
  n.op = Op::kConstant;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Node& na = check(a, "matmul");
  const Node& nb = check(b, "matmul");
  if (na.cols != nb.rows) {
    throw DimensionError("matmul: " + std::to_string(na.rows) + "x" + std::to_string(na.cols) +
                         " * " + std::to_string(nb.rows) + "x" + std::to_string(nb.cols));
  }
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.rows = na.rows;
  n.cols = nb.cols;
  return push(std::move(n));
}

Tape::Id Tape::transpose(Id a) {
  const Node& na = check(a, "transpose");
  Node n;
  n.op = Op::kTranspose;
  n.a = a;
  n.rows = na.cols;
  n.cols = na.rows;
  return push(std::move(n));
}

namespace {
void require_same_shape(const Tape::Node& a, const Tape::Node& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionError(std::string(op) + ": " + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols));
  }
}
}  // namespace

Tape::Id Tape::add(Id a, Id b) {
  const Node& na = check(a, "add");
  const Node& nb = check(b, "add");
  require_same_shape(na, nb, "add");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
  const Node& na = check(a, "sub");
  const Node& nb = check(b, "sub");
  require_same_shape(na, nb, "sub");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
  const Node& na = check(a, "mul");
  const Node& nb = check(b, "mul");
  require_same_shape(na, nb, "mul");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double factor) {
  const Node& na = check(a, "scale");
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.rows = na.rows;
  n.cols = na.cols;
  n.scalar = factor;
  return push(std::move(n));
}

Tape::Id Tape::exp(Id a) {
  const Node& na = check(a, "exp");
  Node n;
  n.op = Op::kExp;
  n.a = a;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::log(Id a) {
  const Node& na = check(a, "log");
  Node n;
  n.op = Op::kLog;
  n.a = a;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::relu(Id a) {
  const Node& na = check(a, "relu");
  Node n;
  n.op = Op::kRelu;
  n.a = a;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::square(Id a) {
  const Node& na = check(a, "square");
  Node n;
  n.op = Op::kSquare;
  n.a = a;
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::row_sum(Id a) {
  const Node& na = check(a, "row_sum");
  Node n;
  n.op = Op::kRowSum;
  n.a = a;
  n.rows = na.rows;
  n.cols = 1;
  return push(std::move(n));
}

Tape::Id Tape::row_max(Id a) {
  const Node& na = check(a, "row_max");
  if (na.cols == 0) throw DimensionError("row_max: zero-column operand");
  Node n;
  n.op = Op::kRowMax;
  n.a = a;
  n.rows = na.rows;
  n.cols = 1;
  return push(std::move(n));
}

Tape::Id Tape::broadcast_col(Id a, std::size_t cols) {
  const Node& na = check(a, "broadcast_col");
  if (na.cols != 1) {
    throw DimensionError("broadcast_col: operand must have one column, got " +
                         std::to_string(na.cols));
  }
  Node n;
  n.op = Op::kBroadcastCol;
  n.a = a;
  n.rows = na.rows;
  n.cols = cols;
  return push(std::move(n));
}

Tape::Id Tape::broadcast_row(Id a, std::size_t rows) {
  const Node& na = check(a, "broadcast_row");
  if (na.rows != 1) {
    throw DimensionError("broadcast_row: operand must have one row, got " +
                         std::to_string(na.rows));
  }
  Node n;
  n.op = Op::kBroadcastRow;
  n.a = a;
  n.rows = rows;
  n.cols = na.cols;
  return push(std::move(n));
}

Tape::Id Tape::pick(Id a, std::vector<int> columns) {
  const Node& na = check(a, "pick");
  if (columns.size() != na.rows) {
    throw DimensionError("pick: " + std::to_string(columns.size()) + " indices for " +
                         std::to_string(na.rows) + " rows");
  }
  for (int c : columns) {
    if (c < 0 || static_cast<std::size_t>(c) >= na.cols) {
      throw ContractError("pick: column index " + std::to_string(c) + " out of range");
    }
  }
  Node n;
  n.op = Op::kPick;
  n.a = a;
  n.rows = na.rows;
  n.cols = 1;
  n.picks = std::move(columns);
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  check(a, "sum");
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.rows = 1;
  n.cols = 1;
  return push(std::move(n));
}

Tape::Id Tape::mean(Id a) {
  const Node& na = check(a, "mean");
  if (na.rows * na.cols == 0) throw DimensionError("mean: empty operand");
  Node n;
  n.op = Op::kMean;
  n.a = a;
  n.rows = 1;
  n.cols = 1;
  return push(std::move(n));
}

// ---------------------------------------------------------------------------

namespace {

void check_finite(const Matrix& m, Tape::Op op, Tape::Id id) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      throw EvalError(std::string(op_name(op)) + " produced a non-finite value (node " +
                          std::to_string(id) + ")",
                      id);
    }
  }
}

Matrix matmul_values(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

}  // namespace

TapeRun::TapeRun(const Tape& tape, Tape::Id output, const Bindings& inputs)
    : tape_(tape), output_(output) {
  const std::size_t n = tape.node_count();
  if (output < 0 || static_cast<std::size_t>(output) >= n) {
    throw ContractError("forward_eval: output id out of range");
  }
  // Ancestry mask: only nodes the output depends on are evaluated.
  live_.assign(n, 0);
  std::vector<Tape::Id> stack{output};
  while (!stack.empty()) {
    const Tape::Id id = stack.back();
    stack.pop_back();
    if (live_[static_cast<std::size_t>(id)]) continue;
    live_[static_cast<std::size_t>(id)] = 1;
    const Tape::Node& node = tape.node(id);
    if (node.a >= 0) stack.push_back(node.a);
    if (node.b >= 0) stack.push_back(node.b);
  }

  values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!live_[i]) continue;
    const Tape::Node& node = tape.node(static_cast<Tape::Id>(i));
    Matrix out;
    switch (node.op) {
      case Tape::Op::kInput: {
        auto it = inputs.find(node.name);
        if (it == inputs.end()) {
          throw ContractError("forward_eval: input '" + node.name + "' not bound");
        }
        if (it->second.rows() != node.rows || it->second.cols() != node.cols) {
          throw DimensionError("input '" + node.name + "': bound " + it->second.shape_str() +
                               ", declared " + std::to_string(node.rows) + "x" +
                               std::to_string(node.cols));
        }
        out = it->second;
        break;
      }
      case Tape::Op::kConstant:
        out = node.value;
        break;
      case Tape::Op::kMatMul:
        out = matmul_values(values_[node.a], values_[node.b]);
        break;
      case Tape::Op::kTranspose: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.cols(), a.rows());
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
        break;
      }
      case Tape::Op::kAdd: {
        const Matrix& a = values_[node.a];
        const Matrix& b = values_[node.b];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] + b.data()[k];
        break;
      }
      case Tape::Op::kSub: {
        const Matrix& a = values_[node.a];
        const Matrix& b = values_[node.b];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] - b.data()[k];
        break;
      }
      case Tape::Op::kMul: {
        const Matrix& a = values_[node.a];
        const Matrix& b = values_[node.b];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] * b.data()[k];
        break;
      }
      case Tape::Op::kScale: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = node.scalar * a.data()[k];
        break;
      }
      case Tape::Op::kExp: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = std::exp(a.data()[k]);
        break;
      }
      case Tape::Op::kLog: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = std::log(a.data()[k]);
        break;
      }
      case Tape::Op::kRelu: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k)
          out.data()[k] = a.data()[k] > 0.0 ? a.data()[k] : 0.0;
        break;
      }
      case Tape::Op::kSquare: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), a.cols());
        for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] * a.data()[k];
        break;
      }
      case Tape::Op::kRowSum: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < a.cols(); ++c) acc += a(r, c);
          out(r, 0) = acc;
        }
        break;
      }
      case Tape::Op::kRowMax: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r) {
          double best = a(r, 0);
          for (std::size_t c = 1; c < a.cols(); ++c) best = std::max(best, a(r, c));
          out(r, 0) = best;
        }
        break;
      }
      case Tape::Op::kBroadcastCol: {
        const Matrix& a = values_[node.a];
        out = Matrix(node.rows, node.cols);
        for (std::size_t r = 0; r < node.rows; ++r)
          for (std::size_t c = 0; c < node.cols; ++c) out(r, c) = a(r, 0);
        break;
      }
      case Tape::Op::kBroadcastRow: {
        const Matrix& a = values_[node.a];
        out = Matrix(node.rows, node.cols);
        for (std::size_t r = 0; r < node.rows; ++r)
          for (std::size_t c = 0; c < node.cols; ++c) out(r, c) = a(0, c);
        break;
      }
      case Tape::Op::kPick: {
        const Matrix& a = values_[node.a];
        out = Matrix(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r)
          out(r, 0) = a(r, static_cast<std::size_t>(node.picks[r]));
        break;
      }
      case Tape::Op::kSum: {
        const Matrix& a = values_[node.a];
        double acc = 0.0;
        for (double v : a.data()) acc += v;
        out = Matrix(1, 1, {acc});
        break;
      }
      case Tape::Op::kMean: {
        const Matrix& a = values_[node.a];
        double acc = 0.0;
        for (double v : a.data()) acc += v;
        out = Matrix(1, 1);
        out(0, 0) = acc / static_cast<double>(a.size());
        break;
      }
    }
    check_finite(out, node.op, static_cast<Tape::Id>(i));
    values_[i] = std::move(out);
  }
}

const Matrix& TapeRun::value(Tape::Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= values_.size() ||
      !live_[static_cast<std::size_t>(id)]) {
    throw ContractError("value: node was not evaluated");
  }
  return values_[static_cast<std::size_t>(id)];
}

double TapeRun::scalar(Tape::Id id) const {
  const Matrix& m = value(id);
  if (m.rows() != 1 || m.cols() != 1) {
    throw ContractError("scalar: node value is " + m.shape_str());
  }
  return m(0, 0);
}

std::map<std::string, Matrix> TapeRun::gradients(const std::vector<std::string>& wrt) const {
  const Tape::Node& out_node = tape_.node(output_);
  if (out_node.rows != 1 || out_node.cols != 1) {
    throw ContractError("backward_grad: output must be scalar, got " +
                        std::to_string(out_node.rows) + "x" + std::to_string(out_node.cols));
  }

  std::vector<Matrix> adj(values_.size());
  adj[static_cast<std::size_t>(output_)] = Matrix(1, 1, {1.0});

  for (Tape::Id id = output_; id >= 0; --id) {
    const std::size_t i = static_cast<std::size_t>(id);
    if (!live_[i] || adj[i].empty()) continue;
    const Tape::Node& node = tape_.node(id);
    const Matrix& g = adj[i];

    auto acc = [&](Tape::Id target) -> Matrix& {
      Matrix& slot = adj[static_cast<std::size_t>(target)];
      if (slot.empty()) {
        const Tape::Node& t = tape_.node(target);
        slot = Matrix(t.rows, t.cols);
      }
      return slot;
    };

    switch (node.op) {
      case Tape::Op::kInput:
      case Tape::Op::kConstant:
        break;
      case Tape::Op::kMatMul: {
        const Matrix& a = values_[node.a];
        const Matrix& b = values_[node.b];
        Matrix& da = acc(node.a);
        for (std::size_t r = 0; r < a.rows(); ++r)
          for (std::size_t k = 0; k < a.cols(); ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < b.cols(); ++c) s += g(r, c) * b(k, c);
            da(r, k) += s;
          }
        Matrix& db = acc(node.b);
        for (std::size_t k = 0; k < b.rows(); ++k)
          for (std::size_t c = 0; c < b.cols(); ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, k) * g(r, c);
            db(k, c) += s;
          }
        break;
      }
      case Tape::Op::kTranspose: {
        Matrix& da = acc(node.a);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) da(c, r) += g(r, c);
        break;
      }
      case Tape::Op::kAdd: {
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) da.data()[k] += g.data()[k];
        Matrix& db = acc(node.b);
        for (std::size_t k = 0; k < g.size(); ++k) db.data()[k] += g.data()[k];
        break;
      }
      case Tape::Op::kSub: {
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) da.data()[k] += g.data()[k];
        Matrix& db = acc(node.b);
        for (std::size_t k = 0; k < g.size(); ++k) db.data()[k] -= g.data()[k];
        break;
      }
      case Tape::Op::kMul: {
        const Matrix& a = values_[node.a];
        const Matrix& b = values_[node.b];
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) da.data()[k] += g.data()[k] * b.data()[k];
        Matrix& db = acc(node.b);
        for (std::size_t k = 0; k < g.size(); ++k) db.data()[k] += g.data()[k] * a.data()[k];
        break;
      }
      case Tape::Op::kScale: {
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) da.data()[k] += node.scalar * g.data()[k];
        break;
      }
      case Tape::Op::kExp: {
        const Matrix& y = values_[i];
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) da.data()[k] += g.data()[k] * y.data()[k];
        break;
      }
      case Tape::Op::kLog: {
        const Matrix& a = values_[node.a];
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k) da.data()[k] += g.data()[k] / a.data()[k];
        break;
      }
      case Tape::Op::kRelu: {
        const Matrix& a = values_[node.a];
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k)
          if (a.data()[k] > 0.0) da.data()[k] += g.data()[k];
        break;
      }
      case Tape::Op::kSquare: {
        const Matrix& a = values_[node.a];
        Matrix& da = acc(node.a);
        for (std::size_t k = 0; k < g.size(); ++k)
          da.data()[k] += 2.0 * a.data()[k] * g.data()[k];
        break;
      }
      case Tape::Op::kRowSum: {
        const Tape::Node& src = tape_.node(node.a);
        Matrix& da = acc(node.a);
        for (std::size_t r = 0; r < src.rows; ++r)
          for (std::size_t c = 0; c < src.cols; ++c) da(r, c) += g(r, 0);
        break;
      }
      case Tape::Op::kRowMax: {
        const Matrix& a = values_[node.a];
        Matrix& da = acc(node.a);
        for (std::size_t r = 0; r < a.rows(); ++r) {
          std::size_t arg = 0;
          for (std::size_t c = 1; c < a.cols(); ++c)
            if (a(r, c) > a(r, arg)) arg = c;
          da(r, arg) += g(r, 0);
        }
        break;
      }
      case Tape::Op::kBroadcastCol: {
        Matrix& da = acc(node.a);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < g.cols(); ++c) s += g(r, c);
          da(r, 0) += s;
        }
        break;
      }
      case Tape::Op::kBroadcastRow: {
        Matrix& da = acc(node.a);
        for (std::size_t c = 0; c < g.cols(); ++c) {
          double s = 0.0;
          for (std::size_t r = 0; r < g.rows(); ++r) s += g(r, c);
          da(0, c) += s;
        }
        break;
      }
      case Tape::Op::kPick: {
        Matrix& da = acc(node.a);
        for (std::size_t r = 0; r < g.rows(); ++r)
          da(r, static_cast<std::size_t>(node.picks[r])) += g(r, 0);
        break;
      }
      case Tape::Op::kSum: {
        const Tape::Node& src = tape_.node(node.a);
        Matrix& da = acc(node.a);
        const double s = g(0, 0);
        for (std::size_t k = 0; k < src.rows * src.cols; ++k) da.data()[k] += s;
        break;
      }
      case Tape::Op::kMean: {
        const Tape::Node& src = tape_.node(node.a);
        Matrix& da = acc(node.a);
        const double s = g(0, 0) / static_cast<double>(src.rows * src.cols);
        for (std::size_t k = 0; k < src.rows * src.cols; ++k) da.data()[k] += s;
        break;
      }
    }
  }

  std::map<std::string, Matrix> out;
  for (const std::string& name : wrt) {
    bool found = false;
    for (std::size_t i = 0; i < tape_.node_count(); ++i) {
      const Tape::Node& node = tape_.node(static_cast<Tape::Id>(i));
      if (node.op == Tape::Op::kInput && node.name == name) {
        found = true;
        if (!live_[i] || adj[i].empty()) {
          out.emplace(name, Matrix(node.rows, node.cols));
        } else {
          out.emplace(name, adj[i]);
        }
        break;
      }
    }
    if (!found) throw ContractError("backward_grad: no input named '" + name + "'");
  }
  return out;
}

Matrix forward_eval(const Tape& tape, Tape::Id output, const Bindings& inputs) {
  return TapeRun(tape, output, inputs).value(output);
}

std::map<std::string, Matrix> backward_grad(const Tape& tape, Tape::Id output,
                                            const Bindings& inputs,
                                            const std::vector<std::string>& wrt) {
  return TapeRun(tape, output, inputs).gradients(wrt);
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& fn, const Matrix& x,
                        double step) {
  if (!(step > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = probe.data()[k];
    probe.data()[k] = saved + step;
    const double hi = fn(probe);
    probe.data()[k] = saved - step;
    const double lo = fn(probe);
    probe.data()[k] = saved;
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw EvalError("finite_diff_grad: non-finite function value");
    }
    grad.data()[k] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

}  // namespace maada
