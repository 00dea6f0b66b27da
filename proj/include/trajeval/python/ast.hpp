#pragma once

#include <cstdint>
#include <deque>
#include <string_view>
#include <vector>

namespace trajeval::python {

// Node kinds of the Python 3.10 abstract grammar. Expression-context
// markers (Load/Store/Del) and type-ignore entries are never materialized.
#define TRAJEVAL_PY_NODE_KINDS(X)                                                           \
  X(Module) X(FunctionDef) X(AsyncFunctionDef) X(ClassDef) X(Return) X(Delete) X(Assign)    \
  X(AugAssign) X(AnnAssign) X(For) X(AsyncFor) X(While) X(If) X(With) X(AsyncWith) X(Match) \
  X(Raise) X(Try) X(Assert) X(Import) X(ImportFrom) X(Global) X(Nonlocal) X(Expr) X(Pass)   \
  X(Break) X(Continue) X(BoolOp) X(NamedExpr) X(BinOp) X(UnaryOp) X(Lambda) X(IfExp)        \
  X(Dict) X(Set) X(ListComp) X(SetComp) X(DictComp) X(GeneratorExp) X(Await) X(Yield)       \
  X(YieldFrom) X(Compare) X(Call) X(FormattedValue) X(JoinedStr) X(Constant) X(Attribute)   \
  X(Subscript) X(Starred) X(Name) X(List) X(Tuple) X(Slice) X(And) X(Or) X(Add) X(Sub)      \
  X(Mult) X(MatMult) X(Div) X(Mod) X(Pow) X(LShift) X(RShift) X(BitOr) X(BitXor) X(BitAnd)  \
  X(FloorDiv) X(Invert) X(Not) X(UAdd) X(USub) X(Eq) X(NotEq) X(Lt) X(LtE) X(Gt) X(GtE)     \
  X(Is) X(IsNot) X(In) X(NotIn) X(comprehension) X(ExceptHandler) X(arguments) X(arg)       \
  X(keyword) X(alias) X(withitem) X(match_case) X(MatchValue) X(MatchSingleton)             \
  X(MatchSequence) X(MatchMapping) X(MatchClass) X(MatchStar) X(MatchAs) X(MatchOr)

enum class NodeKind : std::uint8_t {
#define TRAJEVAL_ENUM_ENTRY(name) name,
  TRAJEVAL_PY_NODE_KINDS(TRAJEVAL_ENUM_ENTRY)
#undef TRAJEVAL_ENUM_ENTRY
};

std::string_view node_kind_name(NodeKind kind);

struct Node {
  NodeKind kind;
  int line = 0;
  int col = 0;
  bool parenthesized = false;
  std::vector<Node*> children;
};

/// Owns every node of one parse. Node addresses are stable.
class Tree {
 public:
  Node* make(NodeKind kind, int line, int col) {
    nodes_.push_back(Node{kind, line, col, false, {}});
    return &nodes_.back();
  }
  Node* root() const { return root_; }
  void set_root(Node* root) { root_ = root; }

 private:
  std::deque<Node> nodes_;
  Node* root_ = nullptr;
};

}  // namespace trajeval::python
