#include "trajeval/python/parser.hpp"

#include <array>
#include <deque>
#include <optional>
#include <string>
#include <utility>

namespace trajeval::python {

std::string_view node_kind_name(NodeKind kind) {
  static constexpr std::array kNames = {
#define TRAJEVAL_NAME_ENTRY(name) std::string_view(#name),
      TRAJEVAL_PY_NODE_KINDS(TRAJEVAL_NAME_ENTRY)
#undef TRAJEVAL_NAME_ENTRY
  };
  return kNames[static_cast<std::size_t>(kind)];
}

namespace {

using K = NodeKind;

enum class TargetUse { Assign, AugAssign, Delete, For };

struct StringPart {
  bool is_field = false;
  bool literal_nonempty = false;
  Node* field = nullptr;  // FormattedValue
};

class Parser {
 public:
  Parser(Tree& tree, std::vector<Token> tokens, std::deque<std::string>& sources)
      : tree_(tree), sources_(sources) {
    for (auto& t : tokens) {
      if (t.kind != TokenKind::Comment && t.kind != TokenKind::Nl) toks_.push_back(t);
    }
  }

  Node* parse_file() {
    Node* module = tree_.make(K::Module, 1, 0);
    while (!at(TokenKind::EndMarker)) {
      if (at(TokenKind::Newline)) {
        advance();
        continue;
      }
      parse_statement(module->children);
    }
    return module;
  }

  // Parses the body of an f-string replacement field, already wrapped in
  // parentheses.
  Node* parse_fstring_expression() {
    Node* e = parse_star_expressions();
    while (at(TokenKind::Newline)) advance();
    if (!at(TokenKind::EndMarker)) error("f-string: invalid syntax");
    return e;
  }

 private:
  // ---- token helpers ------------------------------------------------------

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(TokenKind kind) const { return peek().kind == kind; }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokenKind::Op && t.text == op;
  }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokenKind::Name && t.text == kw;
  }
  bool at_identifier(std::size_t k = 0) const {
    const Token& t = peek(k);
    return t.kind == TokenKind::Name && !is_keyword(t.text);
  }
  const Token& advance() {
    const Token& t = peek();
    if (pos_ < toks_.size()) ++pos_;
    return t;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    advance();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    advance();
    return true;
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) error(std::string("expected '") + std::string(op) + "'");
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) error(std::string("expected '") + std::string(kw) + "'");
  }
  const Token& expect_identifier() {
    if (!at_identifier()) error("invalid syntax");
    return advance();
  }
  [[noreturn]] void error(const std::string& msg) const {
    const Token& t = peek();
    throw SyntaxError(msg, t.line, t.col);
  }
  [[noreturn]] void error_at(const std::string& msg, const Node* n) const {
    throw SyntaxError(msg, n->line, n->col);
  }

  Node* make(K kind, const Token& t) { return tree_.make(kind, t.line, t.col); }
  Node* make(K kind, const Node* at) { return tree_.make(kind, at->line, at->col); }
  static void add(Node* parent, Node* child) {
    if (child != nullptr) parent->children.push_back(child);
  }

  // ---- statements -----------------------------------------------------------

  void parse_statement(std::vector<Node*>& out) {
    if (at(TokenKind::Indent)) error("unexpected indent");
    if (at(TokenKind::Dedent)) error("unindent does not match any outer indentation level");
    if (at_kw("if")) return out.push_back(parse_if());
    if (at_kw("while")) return out.push_back(parse_while());
    if (at_kw("for")) return out.push_back(parse_for(false));
    if (at_kw("try")) return out.push_back(parse_try());
    if (at_kw("with")) return out.push_back(parse_with(false));
    if (at_kw("def")) return out.push_back(parse_funcdef({}));
    if (at_kw("class")) return out.push_back(parse_classdef({}));
    if (at_op("@")) return out.push_back(parse_decorated());
    if (at_kw("async")) {
      if (at_kw("def", 1)) return out.push_back(parse_funcdef({}));
      if (at_kw("for", 1)) {
        advance();
        return out.push_back(parse_for(true));
      }
      if (at_kw("with", 1)) {
        advance();
        return out.push_back(parse_with(true));
      }
      error("invalid syntax");
    }
    if (at_kw("match")) {
      if (Node* m = try_parse_match()) return out.push_back(m);
    }
    parse_simple_statements(out);
  }

  void parse_simple_statements(std::vector<Node*>& out) {
    while (true) {
      out.push_back(parse_simple_statement());
      if (accept_op(";")) {
        if (at(TokenKind::Newline)) break;
        continue;
      }
      break;
    }
    if (!at(TokenKind::Newline)) error("invalid syntax");
    advance();
  }

  std::vector<Node*> parse_block() {
    std::vector<Node*> body;
    expect_op(":");
    if (at(TokenKind::Newline)) {
      advance();
      if (!at(TokenKind::Indent)) error("expected an indented block");
      advance();
      while (!at(TokenKind::Dedent) && !at(TokenKind::EndMarker)) parse_statement(body);
      if (at(TokenKind::Dedent)) advance();
    } else {
      parse_simple_statements(body);
    }
    return body;
  }

  static void append(Node* parent, const std::vector<Node*>& items) {
    parent->children.insert(parent->children.end(), items.begin(), items.end());
  }

  Node* parse_simple_statement() {
    const Token& t = peek();
    if (accept_kw("pass")) return make(K::Pass, t);
    if (accept_kw("break")) return make(K::Break, t);
    if (accept_kw("continue")) return make(K::Continue, t);
    if (accept_kw("return")) {
      Node* n = make(K::Return, t);
      if (!at(TokenKind::Newline) && !at_op(";")) add(n, parse_star_expressions());
      return n;
    }
    if (accept_kw("raise")) {
      Node* n = make(K::Raise, t);
      if (!at(TokenKind::Newline) && !at_op(";")) {
        add(n, parse_expression());
        if (accept_kw("from")) add(n, parse_expression());
      }
      return n;
    }
    if (at_kw("global") || at_kw("nonlocal")) {
      Node* n = make(at_kw("global") ? K::Global : K::Nonlocal, t);
      advance();
      do {
        expect_identifier();
      } while (accept_op(","));
      return n;
    }
    if (accept_kw("del")) return parse_del(t);
    if (accept_kw("assert")) {
      Node* n = make(K::Assert, t);
      add(n, parse_expression());
      if (accept_op(",")) add(n, parse_expression());
      return n;
    }
    if (at_kw("import")) return parse_import();
    if (at_kw("from")) return parse_import_from();
    return parse_expression_statement();
  }

  Node* parse_del(const Token& t) {
    Node* n = make(K::Delete, t);
    do {
      if (at(TokenKind::Newline) || at_op(";")) break;
      Node* target = parse_bitwise_or_target();
      check_target(target, TargetUse::Delete);
      add(n, target);
    } while (accept_op(","));
    if (n->children.empty()) error("invalid syntax");
    return n;
  }

  void parse_dotted_name() {
    expect_identifier();
    while (accept_op(".")) expect_identifier();
  }

  Node* parse_import() {
    Node* n = make(K::Import, advance());
    do {
      Node* a = make(K::alias, peek());
      parse_dotted_name();
      if (accept_kw("as")) expect_identifier();
      add(n, a);
    } while (accept_op(","));
    return n;
  }

  Node* parse_import_from() {
    Node* n = make(K::ImportFrom, advance());
    bool has_dots = false;
    while (at_op(".") || at_op("...")) {
      advance();
      has_dots = true;
    }
    if (!at_kw("import")) {
      parse_dotted_name();
    } else if (!has_dots) {
      error("invalid syntax");
    }
    expect_kw("import");
    if (at_op("*")) {
      add(n, make(K::alias, advance()));
      return n;
    }
    bool parens = accept_op("(");
    do {
      if (parens && at_op(")")) break;
      Node* a = make(K::alias, peek());
      expect_identifier();
      if (accept_kw("as")) expect_identifier();
      add(n, a);
    } while (accept_op(","));
    if (parens) {
      expect_op(")");
    } else if (n->children.empty()) {
      error("invalid syntax");
    }
    if (n->children.empty()) error("invalid syntax");
    return n;
  }

  static bool is_augassign(const Token& t) {
    static constexpr std::array<std::string_view, 13> ops = {
        "+=", "-=", "*=", "@=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", "**=", "//="};
    if (t.kind != TokenKind::Op) return false;
    for (auto op : ops)
      if (t.text == op) return true;
    return false;
  }

  Node* parse_rhs() {
    if (at_kw("yield")) return parse_yield();
    return parse_star_expressions();
  }

  Node* parse_expression_statement() {
    const Token& start = peek();
    Node* first = at_kw("yield") ? parse_yield() : parse_star_expressions();
    if (at_op(":")) {
      advance();
      if (first->kind == K::Tuple && !first->parenthesized)
        error_at("only single target (not tuple) can be annotated", first);
      if (first->kind == K::Tuple) error_at("only single target (not tuple) can be annotated", first);
      if (first->kind == K::List) error_at("only single target (not list) can be annotated", first);
      if (first->kind != K::Name && first->kind != K::Attribute && first->kind != K::Subscript)
        error_at("illegal target for annotation", first);
      Node* n = make(K::AnnAssign, start);
      add(n, first);
      add(n, parse_expression());
      if (accept_op("=")) add(n, parse_rhs());
      return n;
    }
    if (is_augassign(peek())) {
      Node* op = augassign_op(advance());
      if (first->kind != K::Name && first->kind != K::Attribute && first->kind != K::Subscript) {
        check_target(first, TargetUse::AugAssign);
      }
      Node* n = make(K::AugAssign, start);
      add(n, first);
      add(n, op);
      add(n, parse_rhs());
      return n;
    }
    if (at_op("=")) {
      std::vector<Node*> parts{first};
      while (accept_op("=")) parts.push_back(parse_rhs());
      Node* n = make(K::Assign, start);
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (parts[i]->kind == K::Yield || parts[i]->kind == K::YieldFrom)
          error_at("assignment to yield expression not possible", parts[i]);
        check_target(parts[i], TargetUse::Assign);
        add(n, parts[i]);
      }
      add(n, parts.back());
      return n;
    }
    Node* n = make(K::Expr, start);
    add(n, first);
    return n;
  }

  Node* augassign_op(const Token& t) {
    std::string_view s = t.text.substr(0, t.text.size() - 1);
    return make(binary_op_kind(s), t);
  }

  static K binary_op_kind(std::string_view s) {
    if (s == "+") return K::Add;
    if (s == "-") return K::Sub;
    if (s == "*") return K::Mult;
    if (s == "@") return K::MatMult;
    if (s == "/") return K::Div;
    if (s == "%") return K::Mod;
    if (s == "&") return K::BitAnd;
    if (s == "|") return K::BitOr;
    if (s == "^") return K::BitXor;
    if (s == "<<") return K::LShift;
    if (s == ">>") return K::RShift;
    if (s == "**") return K::Pow;
    return K::FloorDiv;
  }

  void check_target(Node* e, TargetUse use) {
    switch (e->kind) {
      case K::Name:
      case K::Attribute:
      case K::Subscript:
        return;
      case K::Starred:
        if (use == TargetUse::Delete) error_at("cannot delete starred", e);
        if (use == TargetUse::AugAssign) error_at("'starred' is an illegal expression for augmented assignment", e);
        check_target(e->children.front(), use);
        return;
      case K::Tuple:
      case K::List:
        if (use == TargetUse::AugAssign)
          error_at(e->kind == K::Tuple ? "'tuple' is an illegal expression for augmented assignment"
                                       : "'list' is an illegal expression for augmented assignment",
                   e);
        for (Node* c : e->children) check_target(c, use);
        return;
      default:
        break;
    }
    std::string what(node_kind_name(e->kind));
    if (use == TargetUse::Delete) error_at("cannot delete " + what, e);
    error_at("cannot assign to " + what, e);
  }

  Node* parse_if() {
    Node* n = make(K::If, advance());
    add(n, parse_named_expression());
    append(n, parse_block());
    if (at_kw("elif")) {
      add(n, parse_if());
    } else if (accept_kw("else")) {
      append(n, parse_block());
    }
    return n;
  }

  Node* parse_while() {
    Node* n = make(K::While, advance());
    add(n, parse_named_expression());
    append(n, parse_block());
    if (accept_kw("else")) append(n, parse_block());
    return n;
  }

  Node* parse_for(bool is_async) {
    Node* n = make(is_async ? K::AsyncFor : K::For, advance());
    add(n, parse_star_targets());
    expect_kw("in");
    add(n, parse_star_expressions());
    append(n, parse_block());
    if (accept_kw("else")) append(n, parse_block());
    return n;
  }

  Node* parse_try() {
    Node* n = make(K::Try, advance());
    append(n, parse_block());
    bool handlers = false;
    while (at_kw("except")) {
      handlers = true;
      Node* h = make(K::ExceptHandler, advance());
      if (!at_op(":")) {
        add(h, parse_expression());
        if (at_op(",")) error("multiple exception types must be parenthesized");
        if (accept_kw("as")) expect_identifier();
      }
      append(h, parse_block());
      add(n, h);
    }
    if (handlers && accept_kw("else")) append(n, parse_block());
    bool final_block = false;
    if (accept_kw("finally")) {
      final_block = true;
      append(n, parse_block());
    }
    if (!handlers && !final_block) error("expected 'except' or 'finally' block");
    return n;
  }

  Node* parse_with_item() {
    Node* item = make(K::withitem, peek());
    add(item, parse_expression());
    if (accept_kw("as")) {
      Node* target = parse_star_target();
      check_target(target, TargetUse::Assign);
      if (!at_op(",") && !at_op(")") && !at_op(":")) error("invalid syntax");
      add(item, target);
    }
    return item;
  }

  Node* parse_with(bool is_async) {
    Node* n = make(is_async ? K::AsyncWith : K::With, advance());
    if (at_op("(")) {
      std::size_t save = pos_;
      try {
        advance();
        std::vector<Node*> items;
        do {
          if (at_op(")")) break;
          items.push_back(parse_with_item());
        } while (accept_op(","));
        expect_op(")");
        if (!at_op(":") || items.empty()) throw SyntaxError("retry", 0, 0);
        append(n, items);
        append(n, parse_block());
        return n;
      } catch (const SyntaxError&) {
        pos_ = save;
        n->children.clear();
      }
    }
    do {
      add(n, parse_with_item());
    } while (accept_op(","));
    append(n, parse_block());
    return n;
  }

  Node* parse_decorated() {
    std::vector<Node*> decorators;
    while (accept_op("@")) {
      decorators.push_back(parse_named_expression());
      if (!at(TokenKind::Newline)) error("invalid syntax");
      advance();
    }
    if (at_kw("def") || (at_kw("async") && at_kw("def", 1))) return parse_funcdef(decorators);
    if (at_kw("class")) return parse_classdef(decorators);
    error("invalid syntax");
  }

  Node* parse_funcdef(const std::vector<Node*>& decorators) {
    bool is_async = accept_kw("async");
    Node* n = make(is_async ? K::AsyncFunctionDef : K::FunctionDef, peek());
    expect_kw("def");
    expect_identifier();
    expect_op("(");
    add(n, parse_parameters(")", true));
    expect_op(")");
    Node* returns = nullptr;
    if (accept_op("->")) returns = parse_expression();
    append(n, parse_block());
    append(n, decorators);
    add(n, returns);
    return n;
  }

  Node* parse_classdef(const std::vector<Node*>& decorators) {
    Node* n = make(K::ClassDef, advance());
    expect_identifier();
    if (accept_op("(")) {
      parse_call_arguments(n, false);
      expect_op(")");
    }
    append(n, parse_block());
    append(n, decorators);
    return n;
  }

  Node* parse_param(bool annotations) {
    Node* a = make(K::arg, peek());
    expect_identifier();
    if (annotations && accept_op(":")) add(a, parse_expression());
    return a;
  }

  // Parses a parameter list up to (not including) `closer`.
  Node* parse_parameters(std::string_view closer, bool annotations) {
    Node* args = make(K::arguments, peek());
    std::vector<Node*> params;
    std::vector<Node*> defaults;
    bool seen_slash = false;
    bool seen_star = false;
    bool seen_default = false;
    bool seen_kwargs = false;
    bool bare_star = false;
    std::size_t positional = 0;
    std::size_t kwonly = 0;
    while (!at_op(closer)) {
      if (seen_kwargs) error("arguments cannot follow var-keyword argument");
      if (at_op("/")) {
        const Token& slash = advance();
        if (seen_slash) throw SyntaxError("/ may appear only once", slash.line, slash.col);
        if (seen_star || positional == 0) throw SyntaxError("invalid syntax", slash.line, slash.col);
        seen_slash = true;
      } else if (accept_op("**")) {
        params.push_back(parse_param(annotations));
        seen_kwargs = true;
      } else if (at_op("*")) {
        advance();
        if (seen_star) error("* argument may appear only once");
        seen_star = true;
        if (at_op(",") || at_op(closer)) {
          bare_star = true;
        } else {
          params.push_back(parse_param(annotations));
        }
      } else {
        params.push_back(parse_param(annotations));
        bool has_default = false;
        if (accept_op("=")) {
          defaults.push_back(parse_expression());
          has_default = true;
        }
        if (seen_star) {
          ++kwonly;
        } else {
          ++positional;
          if (has_default) {
            seen_default = true;
          } else if (seen_default) {
            error("non-default argument follows default argument");
          }
        }
      }
      if (!accept_op(",")) break;
    }
    if (bare_star && kwonly == 0) error("named arguments must follow bare *");
    append(args, params);
    append(args, defaults);
    return args;
  }

  // Parses call-style arguments into `call` (positional first, then keyword
  // nodes). Stops before the closing parenthesis.
  void parse_call_arguments(Node* call, bool allow_genexp) {
    std::vector<Node*> positional;
    std::vector<Node*> keywords;
    bool seen_keyword = false;
    bool seen_double_star = false;
    std::size_t count = 0;
    while (!at_op(")")) {
      ++count;
      if (at_op("*")) {
        const Token& star = advance();
        if (seen_double_star)
          throw SyntaxError("iterable argument unpacking follows keyword argument unpacking", star.line,
                            star.col);
        Node* s = make(K::Starred, star);
        add(s, parse_expression());
        positional.push_back(s);
      } else if (at_op("**")) {
        Node* kw = make(K::keyword, advance());
        add(kw, parse_expression());
        keywords.push_back(kw);
        seen_double_star = true;
      } else if (at_identifier() && at_op("=", 1)) {
        Node* kw = make(K::keyword, advance());
        advance();
        add(kw, parse_expression());
        keywords.push_back(kw);
        seen_keyword = true;
      } else {
        Node* e = parse_named_expression();
        if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
          Node* gen = make(K::GeneratorExp, e);
          add(gen, e);
          parse_comprehension_clauses(gen);
          if (!allow_genexp || count != 1 || !at_op(")"))
            error_at("Generator expression must be parenthesized", e);
          e = gen;
        } else if (at_op("=")) {
          error("expression cannot contain assignment, perhaps you meant \"==\"?");
        }
        if (seen_double_star) error_at("positional argument follows keyword argument unpacking", e);
        if (seen_keyword) error_at("positional argument follows keyword argument", e);
        positional.push_back(e);
      }
      if (!accept_op(",")) break;
    }
    append(call, positional);
    append(call, keywords);
  }

  // ---- match statement --------------------------------------------------

  Node* try_parse_match() {
    std::size_t save = pos_;
    const Token& start = peek();
    Node* subject = nullptr;
    try {
      advance();
      subject = parse_match_subject();
      if (!at_op(":") || peek(1).kind != TokenKind::Newline || peek(2).kind != TokenKind::Indent ||
          !at_kw("case", 3)) {
        pos_ = save;
        return nullptr;
      }
    } catch (const SyntaxError&) {
      pos_ = save;
      return nullptr;
    }
    Node* n = make(K::Match, start);
    add(n, subject);
    advance();  // ':'
    advance();  // NEWLINE
    advance();  // INDENT
    while (at_kw("case")) {
      Node* c = make(K::match_case, advance());
      add(c, parse_patterns());
      if (accept_kw("if")) add(c, parse_named_expression());
      append(c, parse_block());
      add(n, c);
    }
    if (!at(TokenKind::Dedent)) error("invalid syntax");
    advance();
    return n;
  }

  Node* parse_match_subject() {
    if (at_op("*")) {
      Node* first = parse_star_named_expression();
      if (!at_op(",")) error_at("invalid syntax", first);
      return finish_tuple(first);
    }
    Node* first = parse_named_expression();
    if (at_op(",")) return finish_tuple(first);
    return first;
  }

  Node* finish_tuple(Node* first) {
    Node* t = make(K::Tuple, first);
    add(t, first);
    while (accept_op(",")) {
      if (at_op(":") || at(TokenKind::Newline)) break;
      add(t, parse_star_named_expression());
    }
    return t;
  }

  Node* parse_patterns() {
    Node* first = parse_maybe_star_pattern();
    if (!at_op(",")) {
      if (first->kind == K::MatchStar) error_at("invalid syntax", first);
      return first;
    }
    Node* seq = make(K::MatchSequence, first);
    add(seq, first);
    while (accept_op(",")) {
      if (at_op(":") || at_kw("if")) break;
      add(seq, parse_maybe_star_pattern());
    }
    return seq;
  }

  Node* parse_maybe_star_pattern() {
    if (at_op("*")) {
      Node* s = make(K::MatchStar, advance());
      expect_identifier();
      return s;
    }
    return parse_pattern();
  }

  Node* parse_pattern() {
    Node* p = parse_or_pattern();
    if (at_kw("as")) {
      advance();
      if (at_kw("_")) error("cannot use '_' as a target");
      expect_identifier();
      Node* as = make(K::MatchAs, p);
      add(as, p);
      return as;
    }
    return p;
  }

  Node* parse_or_pattern() {
    Node* first = parse_closed_pattern();
    if (!at_op("|")) return first;
    Node* n = make(K::MatchOr, first);
    add(n, first);
    while (accept_op("|")) add(n, parse_closed_pattern());
    return n;
  }

  Node* parse_signed_number() {
    const Token& t = peek();
    Node* value;
    if (accept_op("-")) {
      if (!at(TokenKind::Number)) error("invalid syntax");
      value = make(K::UnaryOp, t);
      add(value, make(K::USub, t));
      add(value, make(K::Constant, advance()));
    } else {
      value = make(K::Constant, advance());
    }
    if (at_op("+") || at_op("-")) {
      const Token& op = advance();
      if (!at(TokenKind::Number)) error("invalid syntax");
      Node* bin = make(K::BinOp, value);
      add(bin, value);
      add(bin, make(op.text == "+" ? K::Add : K::Sub, op));
      add(bin, make(K::Constant, advance()));
      value = bin;
    }
    return value;
  }

  Node* parse_literal_or_value_expr() {
    if (at(TokenKind::Number) || at_op("-")) return parse_signed_number();
    if (at(TokenKind::String)) {
      Node* s = parse_strings();
      if (s->kind == K::JoinedStr) error_at("patterns may only match literals and attribute lookups", s);
      return s;
    }
    if (at_kw("None") || at_kw("True") || at_kw("False")) return make(K::Constant, advance());
    if (at_identifier()) {
      Node* e = make(K::Name, advance());
      if (!at_op(".")) error("invalid syntax");
      while (accept_op(".")) {
        Node* attr = make(K::Attribute, e);
        add(attr, e);
        expect_identifier();
        e = attr;
      }
      return e;
    }
    error("invalid syntax");
  }

  Node* parse_closed_pattern() {
    const Token& t = peek();
    if (at(TokenKind::Number) || at_op("-")) {
      Node* v = make(K::MatchValue, t);
      add(v, parse_signed_number());
      return v;
    }
    if (at(TokenKind::String)) {
      Node* v = make(K::MatchValue, t);
      Node* s = parse_strings();
      if (s->kind == K::JoinedStr) error_at("patterns may only match literals and attribute lookups", s);
      add(v, s);
      return v;
    }
    if (at_kw("None") || at_kw("True") || at_kw("False")) {
      advance();
      return make(K::MatchSingleton, t);
    }
    if (at_identifier()) {
      Node* name = make(K::Name, advance());
      Node* cls = name;
      bool dotted = false;
      while (accept_op(".")) {
        dotted = true;
        Node* attr = make(K::Attribute, cls);
        add(attr, cls);
        expect_identifier();
        cls = attr;
      }
      if (at_op("(")) return parse_class_pattern(cls);
      if (dotted) {
        Node* v = make(K::MatchValue, t);
        add(v, cls);
        return v;
      }
      return make(K::MatchAs, t);  // capture or wildcard
    }
    if (accept_op("(")) {
      if (accept_op(")")) return make(K::MatchSequence, t);
      Node* first = parse_maybe_star_pattern();
      if (accept_op(")")) {
        if (first->kind == K::MatchStar) error_at("invalid syntax", first);
        return first;
      }
      Node* seq = make(K::MatchSequence, t);
      add(seq, first);
      while (accept_op(",")) {
        if (at_op(")")) break;
        add(seq, parse_maybe_star_pattern());
      }
      expect_op(")");
      return seq;
    }
    if (accept_op("[")) {
      Node* seq = make(K::MatchSequence, t);
      while (!at_op("]")) {
        add(seq, parse_maybe_star_pattern());
        if (!accept_op(",")) break;
      }
      expect_op("]");
      return seq;
    }
    if (accept_op("{")) {
      Node* map = make(K::MatchMapping, t);
      std::vector<Node*> keys;
      std::vector<Node*> patterns;
      while (!at_op("}")) {
        if (accept_op("**")) {
          expect_identifier();
          accept_op(",");
          break;
        }
        keys.push_back(parse_literal_or_value_expr());
        expect_op(":");
        patterns.push_back(parse_pattern());
        if (!accept_op(",")) break;
      }
      expect_op("}");
      append(map, keys);
      append(map, patterns);
      return map;
    }
    error("invalid syntax");
  }

  Node* parse_class_pattern(Node* cls) {
    Node* n = make(K::MatchClass, cls);
    add(n, cls);
    expect_op("(");
    bool seen_keyword = false;
    while (!at_op(")")) {
      if (at_identifier() && at_op("=", 1)) {
        advance();
        advance();
        add(n, parse_pattern());
        seen_keyword = true;
      } else {
        Node* p = parse_pattern();
        if (seen_keyword) error_at("positional patterns follow keyword patterns", p);
        add(n, p);
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
    return n;
  }

  // ---- expressions ------------------------------------------------------

  Node* parse_yield() {
    const Token& t = advance();
    if (accept_kw("from")) {
      Node* n = make(K::YieldFrom, t);
      add(n, parse_expression());
      return n;
    }
    Node* n = make(K::Yield, t);
    if (!at_op(")") && !at_op("]") && !at_op("}") && !at(TokenKind::Newline) && !at_op(";") &&
        !at_op("=") && !at(TokenKind::EndMarker)) {
      add(n, parse_star_expressions());
    }
    return n;
  }

  Node* parse_star_expression() {
    if (at_op("*")) {
      Node* s = make(K::Starred, advance());
      add(s, parse_bitwise_or());
      return s;
    }
    return parse_expression();
  }

  Node* parse_star_expressions() {
    Node* first = parse_star_expression();
    if (!at_op(",")) return first;
    Node* t = make(K::Tuple, first);
    add(t, first);
    while (accept_op(",")) {
      if (!starts_expression()) break;
      add(t, parse_star_expression());
    }
    return t;
  }

  bool starts_expression() const {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Name:
        if (!is_keyword(t.text)) return true;
        return t.text == "None" || t.text == "True" || t.text == "False" || t.text == "not" ||
               t.text == "lambda" || t.text == "await" || t.text == "yield";
      case TokenKind::Number:
      case TokenKind::String:
        return true;
      case TokenKind::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "..." || t.text == "**";
      default:
        return false;
    }
  }

  Node* parse_star_named_expression() {
    if (at_op("*")) {
      Node* s = make(K::Starred, advance());
      add(s, parse_bitwise_or());
      return s;
    }
    return parse_named_expression();
  }

  Node* parse_named_expression() {
    if (at_identifier() && at_op(":=", 1)) {
      Node* target = make(K::Name, advance());
      Node* n = make(K::NamedExpr, target);
      advance();
      add(n, target);
      add(n, parse_expression());
      return n;
    }
    Node* e = parse_expression();
    if (at_op(":=")) error_at("cannot use assignment expressions with " + std::string(node_kind_name(e->kind)), e);
    return e;
  }

  Node* parse_expression() {
    if (at_kw("lambda")) return parse_lambda();
    Node* d = parse_disjunction();
    if (at_kw("if")) {
      advance();
      Node* n = make(K::IfExp, d);
      Node* test = parse_disjunction();
      if (!at_kw("else")) error("expected 'else' after 'if' expression");
      advance();
      add(n, test);
      add(n, d);
      add(n, parse_expression());
      return n;
    }
    return d;
  }

  Node* parse_lambda() {
    Node* n = make(K::Lambda, advance());
    add(n, parse_parameters(":", false));
    expect_op(":");
    add(n, parse_expression());
    return n;
  }

  Node* parse_disjunction() {
    Node* first = parse_conjunction();
    if (!at_kw("or")) return first;
    Node* n = make(K::BoolOp, first);
    add(n, make(K::Or, peek()));
    add(n, first);
    while (accept_kw("or")) add(n, parse_conjunction());
    return n;
  }

  Node* parse_conjunction() {
    Node* first = parse_inversion();
    if (!at_kw("and")) return first;
    Node* n = make(K::BoolOp, first);
    add(n, make(K::And, peek()));
    add(n, first);
    while (accept_kw("and")) add(n, parse_inversion());
    return n;
  }

  Node* parse_inversion() {
    if (at_kw("not")) {
      const Token& t = advance();
      Node* n = make(K::UnaryOp, t);
      add(n, make(K::Not, t));
      add(n, parse_inversion());
      return n;
    }
    return parse_comparison();
  }

  std::optional<K> comparison_op() {
    const Token& t = peek();
    if (t.kind == TokenKind::Op) {
      if (t.text == "==") return K::Eq;
      if (t.text == "!=") return K::NotEq;
      if (t.text == "<") return K::Lt;
      if (t.text == "<=") return K::LtE;
      if (t.text == ">") return K::Gt;
      if (t.text == ">=") return K::GtE;
      return std::nullopt;
    }
    if (t.kind == TokenKind::Name) {
      if (t.text == "in") return K::In;
      if (t.text == "is") return at_kw("not", 1) ? K::IsNot : K::Is;
      if (t.text == "not" && at_kw("in", 1)) return K::NotIn;
    }
    return std::nullopt;
  }

  Node* parse_comparison() {
    Node* left = parse_bitwise_or();
    auto op = comparison_op();
    if (!op) return left;
    Node* n = make(K::Compare, left);
    add(n, left);
    while ((op = comparison_op())) {
      const Token& t = advance();
      if (*op == K::IsNot || *op == K::NotIn) advance();
      add(n, make(*op, t));
      add(n, parse_bitwise_or());
    }
    return n;
  }

  template <typename Next>
  Node* parse_binary_level(std::initializer_list<std::string_view> ops, Next next) {
    Node* left = (this->*next)();
    while (true) {
      const Token& t = peek();
      bool matched = false;
      if (t.kind == TokenKind::Op) {
        for (auto op : ops) matched = matched || t.text == op;
      }
      if (!matched) return left;
      advance();
      Node* n = make(K::BinOp, left);
      add(n, left);
      add(n, make(binary_op_kind(t.text), t));
      add(n, (this->*next)());
      left = n;
    }
  }

  Node* parse_bitwise_or() { return parse_binary_level({"|"}, &Parser::parse_bitwise_xor); }
  Node* parse_bitwise_xor() { return parse_binary_level({"^"}, &Parser::parse_bitwise_and); }
  Node* parse_bitwise_and() { return parse_binary_level({"&"}, &Parser::parse_shift); }
  Node* parse_shift() { return parse_binary_level({"<<", ">>"}, &Parser::parse_sum); }
  Node* parse_sum() { return parse_binary_level({"+", "-"}, &Parser::parse_term); }
  Node* parse_term() { return parse_binary_level({"*", "/", "//", "%", "@"}, &Parser::parse_factor); }

  Node* parse_factor() {
    const Token& t = peek();
    if (t.kind == TokenKind::Op && (t.text == "+" || t.text == "-" || t.text == "~")) {
      advance();
      Node* n = make(K::UnaryOp, t);
      add(n, make(t.text == "+" ? K::UAdd : (t.text == "-" ? K::USub : K::Invert), t));
      add(n, parse_factor());
      return n;
    }
    return parse_power();
  }

  Node* parse_power() {
    Node* base;
    if (at_kw("await")) {
      Node* n = make(K::Await, advance());
      add(n, parse_primary());
      base = n;
    } else {
      base = parse_primary();
    }
    if (at_op("**")) {
      const Token& t = advance();
      Node* n = make(K::BinOp, base);
      add(n, base);
      add(n, make(K::Pow, t));
      add(n, parse_factor());
      return n;
    }
    return base;
  }

  Node* parse_primary() {
    Node* e = parse_atom();
    while (true) {
      if (at_op(".")) {
        advance();
        Node* n = make(K::Attribute, e);
        add(n, e);
        expect_identifier();
        e = n;
      } else if (at_op("(")) {
        advance();
        Node* n = make(K::Call, e);
        add(n, e);
        parse_call_arguments(n, true);
        expect_op(")");
        e = n;
      } else if (at_op("[")) {
        advance();
        Node* n = make(K::Subscript, e);
        add(n, e);
        add(n, parse_slices());
        expect_op("]");
        e = n;
      } else {
        return e;
      }
    }
  }

  Node* parse_slice() {
    const Token& t = peek();
    Node* lower = nullptr;
    if (!at_op(":")) {
      Node* e = parse_named_expression();
      if (!at_op(":")) return e;
      lower = e;
    }
    advance();  // ':'
    Node* n = make(K::Slice, t);
    add(n, lower);
    if (!at_op(":") && !at_op(",") && !at_op("]")) add(n, parse_expression());
    if (accept_op(":")) {
      if (!at_op(",") && !at_op("]")) add(n, parse_expression());
    }
    return n;
  }

  Node* parse_slices() {
    if (at_op("*")) error("invalid syntax");
    Node* first = parse_slice();
    if (!at_op(",")) return first;
    Node* t = make(K::Tuple, first);
    add(t, first);
    while (accept_op(",")) {
      if (at_op("]")) break;
      if (at_op("*")) error("invalid syntax");
      add(t, parse_slice());
    }
    return t;
  }

  void parse_comprehension_clauses(Node* owner) {
    while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      accept_kw("async");
      Node* c = make(K::comprehension, advance());
      add(c, parse_star_targets());
      expect_kw("in");
      add(c, parse_disjunction());
      while (accept_kw("if")) add(c, parse_disjunction());
      add(owner, c);
    }
  }

  // Targets are parsed at the bitwise-or level so `in` is not consumed.
  Node* parse_star_target() {
    if (at_op("*")) {
      Node* s = make(K::Starred, advance());
      if (at_op("*")) error("invalid syntax");
      add(s, parse_star_target());
      return s;
    }
    return parse_bitwise_or();
  }

  Node* parse_bitwise_or_target() {
    if (at_op("*")) {
      Node* s = make(K::Starred, advance());
      add(s, parse_bitwise_or());
      return s;
    }
    return parse_bitwise_or();
  }

  Node* parse_star_targets() {
    Node* first = parse_star_target();
    Node* result = first;
    if (at_op(",")) {
      result = make(K::Tuple, first);
      add(result, first);
      while (accept_op(",")) {
        if (at_kw("in") || at_op("=")) break;
        add(result, parse_star_target());
      }
    }
    check_target(result, TargetUse::For);
    return result;
  }

  Node* parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::Name:
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          advance();
          return make(K::Constant, t);
        }
        if (is_keyword(t.text)) error("invalid syntax");
        advance();
        return make(K::Name, t);
      case TokenKind::Number:
        advance();
        return make(K::Constant, t);
      case TokenKind::String:
        return parse_strings();
      case TokenKind::Op:
        if (t.text == "...") {
          advance();
          return make(K::Constant, t);
        }
        if (t.text == "(") return parse_paren();
        if (t.text == "[") return parse_list();
        if (t.text == "{") return parse_brace();
        break;
      default:
        break;
    }
    error("invalid syntax");
  }

  Node* parse_paren() {
    const Token& open = advance();
    if (accept_op(")")) {
      Node* t = make(K::Tuple, open);
      t->parenthesized = true;
      return t;
    }
    if (at_kw("yield")) {
      Node* y = parse_yield();
      expect_op(")");
      y->parenthesized = true;
      return y;
    }
    Node* first = parse_star_named_expression();
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (first->kind == K::Starred) error_at("iterable unpacking cannot be used in comprehension", first);
      Node* gen = make(K::GeneratorExp, open);
      add(gen, first);
      parse_comprehension_clauses(gen);
      expect_op(")");
      return gen;
    }
    if (at_op(",")) {
      Node* t = make(K::Tuple, open);
      add(t, first);
      while (accept_op(",")) {
        if (at_op(")")) break;
        add(t, parse_star_named_expression());
      }
      expect_op(")");
      t->parenthesized = true;
      return t;
    }
    expect_op(")");
    if (first->kind == K::Starred) error_at("cannot use starred expression here", first);
    first->parenthesized = true;
    return first;
  }

  Node* parse_list() {
    const Token& open = advance();
    if (accept_op("]")) return make(K::List, open);
    Node* first = parse_star_named_expression();
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (first->kind == K::Starred) error_at("iterable unpacking cannot be used in comprehension", first);
      Node* comp = make(K::ListComp, open);
      add(comp, first);
      parse_comprehension_clauses(comp);
      expect_op("]");
      return comp;
    }
    Node* list = make(K::List, open);
    add(list, first);
    while (accept_op(",")) {
      if (at_op("]")) break;
      add(list, parse_star_named_expression());
    }
    expect_op("]");
    return list;
  }

  Node* parse_brace() {
    const Token& open = advance();
    if (accept_op("}")) return make(K::Dict, open);
    if (at_op("**")) return parse_dict_rest(open, nullptr, nullptr);
    Node* first = parse_star_named_expression();
    if (at_op(":") && first->kind != K::Starred) {
      if (first->kind == K::NamedExpr && !first->parenthesized) error_at("invalid syntax", first);
      advance();
      Node* value = parse_expression();
      if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
        Node* comp = make(K::DictComp, open);
        add(comp, first);
        add(comp, value);
        parse_comprehension_clauses(comp);
        expect_op("}");
        return comp;
      }
      return parse_dict_rest(open, first, value);
    }
    if (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      if (first->kind == K::Starred) error_at("iterable unpacking cannot be used in comprehension", first);
      Node* comp = make(K::SetComp, open);
      add(comp, first);
      parse_comprehension_clauses(comp);
      expect_op("}");
      return comp;
    }
    Node* set = make(K::Set, open);
    add(set, first);
    while (accept_op(",")) {
      if (at_op("}")) break;
      add(set, parse_star_named_expression());
    }
    expect_op("}");
    return set;
  }

  Node* parse_dict_rest(const Token& open, Node* first_key, Node* first_value) {
    Node* dict = make(K::Dict, open);
    std::vector<Node*> keys;
    std::vector<Node*> values;
    if (first_key != nullptr) {
      keys.push_back(first_key);
      values.push_back(first_value);
      if (!accept_op(",")) {
        expect_op("}");
        append(dict, keys);
        append(dict, values);
        return dict;
      }
    }
    while (!at_op("}")) {
      if (accept_op("**")) {
        values.push_back(parse_bitwise_or());
      } else {
        keys.push_back(parse_expression());
        expect_op(":");
        values.push_back(parse_expression());
      }
      if (!accept_op(",")) break;
    }
    expect_op("}");
    append(dict, keys);
    append(dict, values);
    return dict;
  }

  // ---- strings ------------------------------------------------------------

  struct Literal {
    bool bytes = false;
    bool raw = false;
    bool formatted = false;
    std::string_view body;
  };

  static Literal split_literal(std::string_view text) {
    Literal lit;
    std::size_t q = text.find_first_of("'\"");
    for (char c : text.substr(0, q)) {
      char lc = static_cast<char>(c | 0x20);
      if (lc == 'b') lit.bytes = true;
      if (lc == 'r') lit.raw = true;
      if (lc == 'f') lit.formatted = true;
    }
    std::string_view rest = text.substr(q);
    std::size_t quote_len =
        rest.size() >= 6 && rest[1] == rest[0] && rest[2] == rest[0] ? 3 : 1;
    lit.body = rest.substr(quote_len, rest.size() - 2 * quote_len);
    return lit;
  }

  // True when a non-f-string literal body decodes to a non-empty value.
  static bool literal_nonempty(std::string_view body, bool raw) {
    if (raw) return !body.empty();
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '\\' && i + 1 < body.size() && body[i + 1] == '\n') {
        ++i;
        continue;
      }
      return true;
    }
    return false;
  }

  Node* parse_strings() {
    const Token& first = peek();
    std::vector<StringPart> parts;
    bool any_bytes = false;
    bool any_text = false;
    bool any_formatted = false;
    while (at(TokenKind::String)) {
      const Token& t = advance();
      Literal lit = split_literal(t.text);
      (lit.bytes ? any_bytes : any_text) = true;
      if (lit.formatted) {
        any_formatted = true;
        parse_fstring_body(lit.body, lit.raw, t, parts);
      } else {
        parts.push_back(StringPart{false, literal_nonempty(lit.body, lit.raw), nullptr});
      }
    }
    if (any_bytes && any_text) throw SyntaxError("cannot mix bytes and nonbytes literals", first.line, first.col);
    if (!any_formatted) return make(K::Constant, first);
    Node* joined = make(K::JoinedStr, first);
    append_string_parts(joined, parts, first);
    return joined;
  }

  void append_string_parts(Node* joined, const std::vector<StringPart>& parts, const Token& at) {
    bool pending_literal = false;
    for (const auto& part : parts) {
      if (part.is_field) {
        if (pending_literal) add(joined, make(K::Constant, at));
        pending_literal = false;
        add(joined, part.field);
      } else if (part.literal_nonempty) {
        pending_literal = true;
      }
    }
    if (pending_literal) add(joined, make(K::Constant, at));
  }

  [[noreturn]] static void fstring_error(const std::string& msg, const Token& t) {
    throw SyntaxError("f-string: " + msg, t.line, t.col);
  }

  // Splits an f-string body into literal runs and replacement fields.
  void parse_fstring_body(std::string_view body, bool raw, const Token& tok,
                          std::vector<StringPart>& parts, int depth = 0) {
    std::size_t i = 0;
    bool literal = false;
    auto flush = [&] {
      if (literal) parts.push_back(StringPart{false, true, nullptr});
      literal = false;
    };
    while (i < body.size()) {
      char c = body[i];
      if (c == '{') {
        if (i + 1 < body.size() && body[i + 1] == '{') {
          literal = true;
          i += 2;
          continue;
        }
        flush();
        i = parse_fstring_field(body, i + 1, raw, tok, parts, depth);
        continue;
      }
      if (c == '}') {
        if (i + 1 < body.size() && body[i + 1] == '}') {
          literal = true;
          i += 2;
          continue;
        }
        fstring_error("single '}' is not allowed", tok);
      }
      if (c == '\\' && !raw && i + 1 < body.size()) {
        if (body[i + 1] == '\n') {
          i += 2;
          continue;
        }
        if (body[i + 1] == 'N' && i + 2 < body.size() && body[i + 2] == '{') {
          std::size_t close = body.find('}', i + 3);
          if (close == std::string_view::npos) fstring_error("malformed \\N character escape", tok);
          literal = true;
          i = close + 1;
          continue;
        }
        literal = true;
        i += 2;
        continue;
      }
      literal = true;
      ++i;
    }
    flush();
  }

  // `start` points just after the opening brace. Returns the index after the
  // closing brace.
  std::size_t parse_fstring_field(std::string_view body, std::size_t start, bool raw, const Token& tok,
                                  std::vector<StringPart>& parts, int depth) {
    if (depth >= 2) fstring_error("expressions nested too deeply", tok);
    std::size_t i = start;
    int nesting = 0;
    char quote = 0;
    bool triple = false;
    std::size_t expr_end = std::string_view::npos;
    bool debug = false;
    while (i < body.size()) {
      char c = body[i];
      if (quote != 0) {
        if (c == quote) {
          if (!triple) {
            quote = 0;
          } else if (i + 2 < body.size() && body[i + 1] == quote && body[i + 2] == quote) {
            quote = 0;
            i += 2;
          }
        }
        ++i;
        continue;
      }
      if (c == '\\') fstring_error("expression part cannot include a backslash", tok);
      if (c == '\'' || c == '"') {
        quote = c;
        triple = i + 2 < body.size() && body[i + 1] == c && body[i + 2] == c;
        i += triple ? 3 : 1;
        continue;
      }
      if (c == '(' || c == '[' || c == '{') {
        ++nesting;
      } else if (c == ')' || c == ']' || (c == '}' && nesting > 0)) {
        --nesting;
      } else if (nesting == 0) {
        if (c == '#') fstring_error("expression part cannot include '#'", tok);
        if (c == '}' || c == ':') {
          expr_end = i;
          break;
        }
        if (c == '!' && !(i + 1 < body.size() && body[i + 1] == '=')) {
          expr_end = i;
          break;
        }
        if (c == '=' && i + 1 < body.size() && body[i + 1] != '=' && i > start &&
            std::string_view("=!<>").find(body[i - 1]) == std::string_view::npos) {
          expr_end = i;
          debug = true;
          break;
        }
      }
      ++i;
    }
    if (expr_end == std::string_view::npos) fstring_error("expecting '}'", tok);
    std::string_view expr = body.substr(start, expr_end - start);
    if (expr.find_first_not_of(" \t\n\f") == std::string_view::npos)
      fstring_error("empty expression not allowed", tok);

    Node* value = parse_sub_expression(expr, tok);
    Node* fv = make(K::FormattedValue, tok);
    add(fv, value);

    i = expr_end;
    if (debug) {
      parts.push_back(StringPart{false, true, nullptr});
      ++i;
      while (i < body.size() && (body[i] == ' ' || body[i] == '\t' || body[i] == '\n')) ++i;
    }
    if (i < body.size() && body[i] == '!') {
      if (i + 1 >= body.size() || std::string_view("sra").find(body[i + 1]) == std::string_view::npos)
        fstring_error("invalid conversion character: expected 's', 'r', or 'a'", tok);
      i += 2;
    }
    if (i < body.size() && body[i] == ':') {
      ++i;
      std::size_t spec_start = i;
      int spec_nesting = 0;
      while (i < body.size()) {
        if (body[i] == '{') {
          ++spec_nesting;
        } else if (body[i] == '}') {
          if (spec_nesting == 0) break;
          --spec_nesting;
        }
        ++i;
      }
      if (i >= body.size()) fstring_error("expecting '}'", tok);
      std::vector<StringPart> spec_parts;
      parse_fstring_body(body.substr(spec_start, i - spec_start), raw, tok, spec_parts, depth + 1);
      Node* spec = make(K::JoinedStr, tok);
      append_string_parts(spec, spec_parts, tok);
      add(fv, spec);
    }
    if (i >= body.size() || body[i] != '}') fstring_error("expecting '}'", tok);
    parts.push_back(StringPart{true, false, fv});
    return i + 1;
  }

  Node* parse_sub_expression(std::string_view expr, const Token& tok) {
    sources_.push_back("(" + std::string(expr) + ")");
    std::vector<Token> tokens;
    try {
      tokens = tokenize(sources_.back());
    } catch (const SyntaxError& e) {
      fstring_error(e.what(), tok);
    }
    Parser sub(tree_, std::move(tokens), sources_);
    try {
      return sub.parse_fstring_expression();
    } catch (const SyntaxError& e) {
      throw SyntaxError(e.what(), tok.line, tok.col);
    }
  }

  Tree& tree_;
  std::deque<std::string>& sources_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

Tree parse_module(std::string_view source) {
  std::string normalized = normalize_newlines(source);
  std::deque<std::string> sources;
  Tree tree;
  Parser parser(tree, tokenize(normalized), sources);
  tree.set_root(parser.parse_file());
  return tree;
}

}  // namespace trajeval::python
