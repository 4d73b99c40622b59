#include "vdc/parser.hpp"

#include <cctype>
#include <functional>
#include <sstream>

namespace vdc {

namespace {

enum class Tok {
  End, Int, Name,
  // punctuation and operators
  LBrace, RBrace, LParen, RParen, LBracket, RBracket,
  Semi, Comma, Colon, Dot, Question,
  Assign,     // :=
  Arrow,      // <-
  MapsTo,     // |->
  StarStar,   // &*&
  AImp,       // ==>
  Classify,   // ::
  OrOr, AndAnd, Not,
  EqEq, NotEq, Lt, Le, Gt, Ge,
  Plus, Minus, Star, Slash, Percent,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long value = 0;
  SourceSpan span;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, SourceSpan span)
      : std::runtime_error(std::move(msg)), span(span) {}
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.span.begin = {line_, col_};
    if (pos_ >= text_.size()) {
      tok_.kind = Tok::End;
      tok_.span.end = tok_.span.begin;
      return;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        bump();
      tok_.kind = Tok::Int;
      tok_.text = text_.substr(start, pos_ - start);
      try {
        tok_.value = std::stoll(tok_.text);
      } catch (const std::out_of_range&) {
        throw ParseError("integer literal out of range", tok_.span);
      }
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        bump();
      tok_.kind = Tok::Name;
      tok_.text = text_.substr(start, pos_ - start);
    } else {
      auto two = [&](char a, char b) {
        return c == a && pos_ + 1 < text_.size() && text_[pos_ + 1] == b;
      };
      auto three = [&](const char* s) {
        return pos_ + 2 < text_.size() && text_.compare(pos_, 3, s) == 0;
      };
      if (three("&*&")) { tok_.kind = Tok::StarStar; bump(); bump(); bump(); }
      else if (three("|->")) { tok_.kind = Tok::MapsTo; bump(); bump(); bump(); }
      else if (three("==>")) { tok_.kind = Tok::AImp; bump(); bump(); bump(); }
      else if (two(':', '=')) { tok_.kind = Tok::Assign; bump(); bump(); }
      else if (two(':', ':')) { tok_.kind = Tok::Classify; bump(); bump(); }
      else if (two('<', '-')) { tok_.kind = Tok::Arrow; bump(); bump(); }
      else if (two('=', '=')) { tok_.kind = Tok::EqEq; bump(); bump(); }
      else if (two('!', '=')) { tok_.kind = Tok::NotEq; bump(); bump(); }
      else if (two('<', '=')) { tok_.kind = Tok::Le; bump(); bump(); }
      else if (two('>', '=')) { tok_.kind = Tok::Ge; bump(); bump(); }
      else if (two('|', '|')) { tok_.kind = Tok::OrOr; bump(); bump(); }
      else if (two('&', '&')) { tok_.kind = Tok::AndAnd; bump(); bump(); }
      else {
        switch (c) {
          case '{': tok_.kind = Tok::LBrace; break;
          case '}': tok_.kind = Tok::RBrace; break;
          case '(': tok_.kind = Tok::LParen; break;
          case ')': tok_.kind = Tok::RParen; break;
          case '[': tok_.kind = Tok::LBracket; break;
          case ']': tok_.kind = Tok::RBracket; break;
          case ';': tok_.kind = Tok::Semi; break;
          case ',': tok_.kind = Tok::Comma; break;
          case ':': tok_.kind = Tok::Colon; break;
          case '.': tok_.kind = Tok::Dot; break;
          case '?': tok_.kind = Tok::Question; break;
          case '!': tok_.kind = Tok::Not; break;
          case '<': tok_.kind = Tok::Lt; break;
          case '>': tok_.kind = Tok::Gt; break;
          case '+': tok_.kind = Tok::Plus; break;
          case '-': tok_.kind = Tok::Minus; break;
          case '*': tok_.kind = Tok::Star; break;
          case '/': tok_.kind = Tok::Slash; break;
          case '%': tok_.kind = Tok::Percent; break;
          default:
            throw ParseError(std::string("unexpected character '") + c + "'", tok_.span);
        }
        bump();
      }
    }
    tok_.span.end = {line_, col_};
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') bump();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

bool is_keyword(const std::string& s) {
  static const std::set<std::string> kw = {
      "lattice", "order", "event", "lock", "unlock", "invariant", "policy",
      "when", "release", "proc", "requires", "ensures", "load", "store",
      "out", "assume", "assert", "split", "trace", "skip", "if", "else",
      "while", "par", "emp", "History", "exists", "forall", "true", "false",
      "nil", "len", "sum", "contains", "snoc", "cat", "int", "bool", "label",
      "__tr"};
  return kw.count(s) > 0;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) {}

  Program parse() {
    Program p;
    if (at_name("lattice")) p.lattice = parse_lattice();
    while (at_name("event")) p.events.push_back(parse_event());
    while (at_name("lock")) p.locks.push_back(parse_lock());
    while (at_name("policy")) p.policies.push_back(parse_policy(p));
    while (at_name("proc")) p.procs.push_back(parse_proc());
    if (lex_.peek().kind != Tok::End)
      throw ParseError("expected a declaration", lex_.peek().span);
    if (p.procs.empty())
      throw ParseError("a program needs at least one procedure", lex_.peek().span);
    resolve_labels(p);
    SortChecker(p).check_program();
    check_wellformed(p);
    return p;
  }

 private:
  Lexer lex_;

  // --- token helpers ---------------------------------------------------

  bool at(Tok k) const { return lex_.peek().kind == k; }
  bool at_name(const std::string& s) const {
    return at(Tok::Name) && lex_.peek().text == s;
  }

  Token expect(Tok k, const std::string& what) {
    if (!at(k)) throw ParseError("expected " + what, lex_.peek().span);
    return lex_.next();
  }

  void expect_kw(const std::string& s) {
    if (!at_name(s)) throw ParseError("expected '" + s + "'", lex_.peek().span);
    lex_.next();
  }

  bool eat(Tok k) {
    if (!at(k)) return false;
    lex_.next();
    return true;
  }

  std::string ident() {
    Token t = expect(Tok::Name, "an identifier");
    if (is_keyword(t.text))
      throw ParseError("'" + t.text + "' is a reserved word", t.span);
    return t.text;
  }

  // --- declarations ----------------------------------------------------

  Lattice parse_lattice() {
    expect_kw("lattice");
    expect(Tok::LBrace, "'{'");
    std::vector<std::string> names;
    names.push_back(ident());
    while (eat(Tok::Comma)) names.push_back(ident());
    expect(Tok::Semi, "';'");
    expect_kw("order");
    expect(Tok::Colon, "':'");
    std::vector<std::pair<std::string, std::string>> order;
    do {
      std::string a = ident();
      expect(Tok::Lt, "'<'");
      std::string b = ident();
      order.emplace_back(a, b);
    } while (eat(Tok::Comma));
    expect(Tok::RBrace, "'}'");
    return Lattice(names, order);
  }

  EventDecl parse_event() {
    EventDecl d;
    d.span = lex_.peek().span;
    expect_kw("event");
    d.name = ident();
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      expect_kw("int");
      d.arity = 1;
      while (eat(Tok::Comma)) {
        expect_kw("int");
        ++d.arity;
      }
    }
    expect(Tok::RParen, "')'");
    expect(Tok::Semi, "';'");
    return d;
  }

  LockDecl parse_lock() {
    LockDecl d;
    d.span = lex_.peek().span;
    expect_kw("lock");
    d.name = ident();
    expect_kw("invariant");
    expect(Tok::LParen, "'('");
    d.invariant = parse_assertion();
    expect(Tok::RParen, "')'");
    expect(Tok::Semi, "';'");
    return d;
  }

  PolicyDecl parse_policy(const Program&) {
    PolicyDecl d;
    d.span = lex_.peek().span;
    expect_kw("policy");
    d.name = ident();
    expect(Tok::LParen, "'('");
    d.trace_var = ident();
    while (eat(Tok::Comma)) d.params.push_back(ident());
    expect(Tok::RParen, "')'");
    expect(Tok::LBrace, "'{'");
    expect_kw("when");
    expect(Tok::Colon, "':'");
    d.when = parse_expr();
    expect(Tok::Semi, "';'");
    expect_kw("release");
    expect(Tok::Colon, "':'");
    d.release = parse_assertion();
    expect(Tok::Semi, "';'");
    expect(Tok::RBrace, "'}'");
    return d;
  }

  ProcDecl parse_proc() {
    ProcDecl d;
    d.span = lex_.peek().span;
    expect_kw("proc");
    d.name = ident();
    expect(Tok::LParen, "'('");
    expect(Tok::RParen, "')'");
    expect_kw("requires");
    expect(Tok::Colon, "':'");
    d.requires_ = parse_assertion();
    expect_kw("ensures");
    expect(Tok::Colon, "':'");
    d.ensures_ = parse_assertion();
    d.body = parse_block();
    return d;
  }

  // --- statements ------------------------------------------------------

  CommandPtr parse_block() {
    expect(Tok::LBrace, "'{'");
    CommandPtr body = parse_stmts_until_rbrace();
    expect(Tok::RBrace, "'}'");
    return body;
  }

  CommandPtr parse_stmts_until_rbrace() {
    std::vector<CommandPtr> stmts;
    while (!at(Tok::RBrace) && !at(Tok::End)) stmts.push_back(parse_stmt());
    if (stmts.empty()) return mk::skip();
    CommandPtr c = stmts.back();
    for (size_t i = stmts.size() - 1; i-- > 0;) c = mk::seq(stmts[i], c);
    return c;
  }

  CommandPtr parse_stmt() {
    SourceSpan span = lex_.peek().span;
    CommandPtr c;
    if (at_name("skip")) {
      lex_.next();
      expect(Tok::Semi, "';'");
      c = mk::skip();
    } else if (at_name("load")) {
      lex_.next();
      std::string x = ident();
      expect(Tok::Arrow, "'<-'");
      expect(Tok::LBracket, "'['");
      ExprPtr addr = parse_expr();
      expect(Tok::RBracket, "']'");
      expect(Tok::Semi, "';'");
      c = mk::load(x, addr);
    } else if (at_name("store")) {
      lex_.next();
      expect(Tok::LBracket, "'['");
      ExprPtr addr = parse_expr();
      expect(Tok::RBracket, "']'");
      expect(Tok::Arrow, "'<-'");
      ExprPtr val = parse_expr();
      expect(Tok::Semi, "';'");
      c = mk::store(addr, val);
    } else if (at_name("lock")) {
      lex_.next();
      c = mk::lock(ident());
      expect(Tok::Semi, "';'");
    } else if (at_name("unlock")) {
      lex_.next();
      c = mk::unlock(ident());
      expect(Tok::Semi, "';'");
    } else if (at_name("out")) {
      lex_.next();
      expect(Tok::LBracket, "'['");
      ExprPtr level = parse_expr();
      expect(Tok::RBracket, "']'");
      expect(Tok::LParen, "'('");
      ExprPtr value = parse_expr();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      c = mk::output(level, value);
    } else if (at_name("assume") || at_name("release")) {
      bool justified = lex_.peek().text == "release";
      lex_.next();
      expect(Tok::LParen, "'('");
      AssertionPtr rho = parse_assertion();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      if (!is_pure(rho)) throw ParseError("assume body must be pure", span);
      c = mk::assume(rho, justified);
    } else if (at_name("assert")) {
      lex_.next();
      expect(Tok::LParen, "'('");
      AssertionPtr a = parse_assertion();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      c = mk::assert_(a);
    } else if (at_name("split")) {
      lex_.next();
      expect(Tok::LParen, "'('");
      ExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      c = mk::split(e);
    } else if (at_name("trace")) {
      lex_.next();
      expect(Tok::LParen, "'('");
      ExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      expect(Tok::Semi, "';'");
      c = mk::trace_emit(e);
    } else if (at_name("if")) {
      lex_.next();
      expect(Tok::LParen, "'('");
      ExprPtr cond = parse_expr();
      expect(Tok::RParen, "')'");
      CommandPtr then = parse_block();
      CommandPtr els = mk::skip();
      if (at_name("else")) {
        lex_.next();
        els = parse_block();
      }
      c = mk::if_(cond, then, els);
    } else if (at_name("while")) {
      lex_.next();
      expect(Tok::LParen, "'('");
      ExprPtr cond = parse_expr();
      expect(Tok::RParen, "')'");
      expect_kw("invariant");
      expect(Tok::LParen, "'('");
      AssertionPtr inv = parse_assertion();
      expect(Tok::RParen, "')'");
      CommandPtr body = parse_block();
      c = mk::while_(cond, inv, body);
    } else if (at_name("par")) {
      lex_.next();
      auto [pre1, post1, c1] = parse_par_branch();
      auto [pre2, post2, c2] = parse_par_branch();
      c = mk::par(c1, c2, pre1, post1, pre2, post2);
    } else if (at(Tok::Name)) {
      std::string x = ident();
      expect(Tok::Assign, "':='");
      ExprPtr e = parse_expr();
      expect(Tok::Semi, "';'");
      c = mk::assign(x, e);
    } else {
      throw ParseError("expected a statement", span);
    }
    const_cast<Command*>(c.get())->span = span;
    return c;
  }

  std::tuple<AssertionPtr, AssertionPtr, CommandPtr> parse_par_branch() {
    expect(Tok::LBrace, "'{'");
    expect_kw("requires");
    expect(Tok::Colon, "':'");
    AssertionPtr pre = parse_assertion();
    expect(Tok::Semi, "';'");
    expect_kw("ensures");
    expect(Tok::Colon, "':'");
    AssertionPtr post = parse_assertion();
    expect(Tok::Semi, "';'");
    CommandPtr body = parse_stmts_until_rbrace();
    expect(Tok::RBrace, "'}'");
    return {pre, post, body};
  }

  // --- assertions --------------------------------------------------------
  //
  //   assertion := "exists" x (":" sort)? "." assertion
  //              | "forall" x (":" sort)? "." assertion
  //              | star ("==>" assertion)?
  //   star      := atom ("&*&" atom)*
  //   atom      := "emp" | "History" "(" expr ")"
  //              | expr ("::" expr | "|->" expr)?

  AssertionPtr parse_assertion() {
    SourceSpan span = lex_.peek().span;
    if (at_name("exists") || at_name("forall")) {
      bool ex = lex_.peek().text == "exists";
      lex_.next();
      std::string x = ident();
      Sort s = Sort::Int;
      if (eat(Tok::Colon)) s = parse_sort();
      expect(Tok::Dot, "'.'");
      AssertionPtr body = parse_assertion();
      auto a = ex ? mk::exists(x, s, body) : mk::forall(x, s, body);
      const_cast<Assertion*>(a.get())->span = span;
      return a;
    }
    AssertionPtr lhs = parse_star();
    if (eat(Tok::AImp)) {
      AssertionPtr rhs = parse_assertion();
      auto a = mk::impl(lhs, rhs);
      const_cast<Assertion*>(a.get())->span = span;
      return a;
    }
    return lhs;
  }

  AssertionPtr parse_star() {
    AssertionPtr a = parse_aatom();
    while (at(Tok::StarStar)) {
      lex_.next();
      a = mk::star(a, parse_aatom());
    }
    return a;
  }

  AssertionPtr parse_aatom() {
    SourceSpan span = lex_.peek().span;
    AssertionPtr a;
    if (at_name("emp")) {
      lex_.next();
      a = mk::emp();
    } else if (at_name("History")) {
      lex_.next();
      expect(Tok::LParen, "'('");
      ExprPtr tr = parse_expr();
      expect(Tok::RParen, "')'");
      a = mk::history(tr);
    } else {
      ExprPtr e = parse_expr();
      if (eat(Tok::Classify)) {
        ExprPtr label = parse_expr();
        a = mk::classify(e, label);
      } else if (eat(Tok::MapsTo)) {
        ExprPtr val = parse_expr();
        a = mk::points_to(e, val);
      } else {
        a = mk::pure(e);
      }
    }
    const_cast<Assertion*>(a.get())->span = span;
    return a;
  }

  Sort parse_sort() {
    Token t = expect(Tok::Name, "a sort");
    if (t.text == "int") return Sort::Int;
    if (t.text == "bool") return Sort::Bool;
    if (t.text == "label") return Sort::Label;
    if (t.text == "trace") return Sort::Trace;
    if (t.text == "event") return Sort::Event;
    throw ParseError("unknown sort '" + t.text + "'", t.span);
  }

  // --- expressions -------------------------------------------------------

  ExprPtr parse_expr() { return parse_ite(); }

  ExprPtr parse_ite() {
    ExprPtr c = parse_or();
    if (eat(Tok::Question)) {
      ExprPtr t = parse_expr();
      expect(Tok::Colon, "':'");
      ExprPtr e = parse_expr();
      return mk::ite(c, t, e);
    }
    return c;
  }

  ExprPtr parse_or() {
    ExprPtr a = parse_and();
    while (at(Tok::OrOr)) {
      lex_.next();
      a = mk::binary(BinOp::Or, a, parse_and());
    }
    return a;
  }

  ExprPtr parse_and() {
    ExprPtr a = parse_cmp();
    while (at(Tok::AndAnd)) {
      lex_.next();
      a = mk::binary(BinOp::And, a, parse_cmp());
    }
    return a;
  }

  ExprPtr parse_cmp() {
    ExprPtr a = parse_add();
    BinOp op;
    switch (lex_.peek().kind) {
      case Tok::EqEq: op = BinOp::Eq; break;
      case Tok::NotEq: op = BinOp::Ne; break;
      case Tok::Lt: op = BinOp::Lt; break;
      case Tok::Le: op = BinOp::Le; break;
      case Tok::Gt: op = BinOp::Gt; break;
      case Tok::Ge: op = BinOp::Ge; break;
      default: return a;
    }
    lex_.next();
    return mk::binary(op, a, parse_add());
  }

  ExprPtr parse_add() {
    ExprPtr a = parse_mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      lex_.next();
      a = mk::binary(op, a, parse_mul());
    }
    return a;
  }

  ExprPtr parse_mul() {
    ExprPtr a = parse_unary();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      BinOp op = at(Tok::Star) ? BinOp::Mul : at(Tok::Slash) ? BinOp::Div : BinOp::Mod;
      lex_.next();
      a = mk::binary(op, a, parse_unary());
    }
    return a;
  }

  ExprPtr parse_unary() {
    SourceSpan span = lex_.peek().span;
    if (eat(Tok::Minus)) {
      ExprPtr e = mk::unary(UnOp::Neg, parse_unary());
      const_cast<Expr*>(e.get())->span = span;
      return e;
    }
    if (eat(Tok::Not)) {
      ExprPtr e = mk::unary(UnOp::Not, parse_unary());
      const_cast<Expr*>(e.get())->span = span;
      return e;
    }
    return parse_prim();
  }

  ExprPtr parse_prim() {
    Token t = lex_.peek();
    ExprPtr e;
    if (t.kind == Tok::Int) {
      lex_.next();
      e = mk::int_lit(t.value);
    } else if (t.kind == Tok::LParen) {
      lex_.next();
      e = parse_expr();
      expect(Tok::RParen, "')'");
    } else if (t.kind == Tok::Name) {
      if (t.text == "true" || t.text == "false") {
        lex_.next();
        e = mk::bool_lit(t.text == "true");
      } else if (t.text == "nil") {
        lex_.next();
        e = mk::nil();
      } else if (t.text == "__tr") {
        lex_.next();
        e = mk::current_trace();
      } else if (t.text == "len" || t.text == "sum") {
        lex_.next();
        expect(Tok::LParen, "'('");
        ExprPtr arg = parse_expr();
        expect(Tok::RParen, "')'");
        e = t.text == "len" ? mk::len(arg) : mk::sum(arg);
      } else if (t.text == "contains" || t.text == "snoc" || t.text == "cat") {
        lex_.next();
        expect(Tok::LParen, "'('");
        ExprPtr a = parse_expr();
        expect(Tok::Comma, "','");
        ExprPtr b = parse_expr();
        expect(Tok::RParen, "')'");
        e = t.text == "contains" ? mk::contains(a, b)
            : t.text == "snoc"   ? mk::snoc(a, b)
                                 : mk::cat(a, b);
      } else if (is_keyword(t.text)) {
        throw ParseError("unexpected '" + t.text + "' in expression", t.span);
      } else {
        std::string name = t.text;
        lex_.next();
        if (eat(Tok::LParen)) {
          std::vector<ExprPtr> args;
          if (!at(Tok::RParen)) {
            args.push_back(parse_expr());
            while (eat(Tok::Comma)) args.push_back(parse_expr());
          }
          expect(Tok::RParen, "')'");
          e = mk::event(name, std::move(args));
        } else {
          e = mk::var(name);
        }
      }
    } else {
      throw ParseError("expected an expression", t.span);
    }
    const_cast<Expr*>(e.get())->span = t.span;
    return e;
  }

  // --- post-parse resolution -----------------------------------------------

  // Bare names that match a lattice level become label literals.
  void resolve_labels(Program& p) {
    std::function<ExprPtr(const ExprPtr&)> on_expr = [&](const ExprPtr& e) -> ExprPtr {
      if (!e) return e;
      if (e->kind == ExprKind::Var && p.lattice.try_level(e->name)) {
        auto lab = mk::label(e->name);
        const_cast<Expr*>(lab.get())->span = e->span;
        return lab;
      }
      bool changed = false;
      std::vector<ExprPtr> args;
      for (const auto& a : e->args) {
        auto a2 = on_expr(a);
        changed |= (a2 != a);
        args.push_back(a2);
      }
      if (!changed) return e;
      auto n = std::make_shared<Expr>(*e);
      n->args = std::move(args);
      return n;
    };
    std::function<AssertionPtr(const AssertionPtr&)> on_assert =
        [&](const AssertionPtr& a) -> AssertionPtr {
      if (!a) return a;
      if ((a->kind == AssertKind::Exists || a->kind == AssertKind::Forall) &&
          p.lattice.try_level(a->name))
        throw ParseError("binder '" + a->name + "' shadows a security level", a->span);
      auto n = std::make_shared<Assertion>(*a);
      n->e1 = on_expr(a->e1);
      n->e2 = on_expr(a->e2);
      n->a1 = on_assert(a->a1);
      n->a2 = on_assert(a->a2);
      for (auto& e : n->args) e = on_expr(e);
      return n;
    };
    std::function<CommandPtr(const CommandPtr&)> on_cmd =
        [&](const CommandPtr& c) -> CommandPtr {
      if (!c) return c;
      if ((c->kind == CmdKind::Assign || c->kind == CmdKind::Load) &&
          p.lattice.try_level(c->var))
        throw ParseError("cannot assign to security level '" + c->var + "'", c->span);
      auto n = std::make_shared<Command>(*c);
      n->e1 = on_expr(c->e1);
      n->e2 = on_expr(c->e2);
      n->c1 = on_cmd(c->c1);
      n->c2 = on_cmd(c->c2);
      n->inv = on_assert(c->inv);
      n->pre1 = on_assert(c->pre1);
      n->post1 = on_assert(c->post1);
      n->pre2 = on_assert(c->pre2);
      n->post2 = on_assert(c->post2);
      return n;
    };
    for (auto& l : p.locks) l.invariant = on_assert(l.invariant);
    for (auto& pol : p.policies) {
      pol.when = on_expr(pol.when);
      pol.release = on_assert(pol.release);
    }
    for (auto& pr : p.procs) {
      pr.requires_ = on_assert(pr.requires_);
      pr.ensures_ = on_assert(pr.ensures_);
      pr.body = on_cmd(pr.body);
    }
  }

  void check_wellformed(Program& p) {
    for (size_t i = 0; i < p.locks.size(); ++i)
      for (size_t j = i + 1; j < p.locks.size(); ++j)
        if (p.locks[i].name == p.locks[j].name)
          throw ParseError("duplicate lock '" + p.locks[i].name + "'", p.locks[j].span);
    for (size_t i = 0; i < p.events.size(); ++i)
      for (size_t j = i + 1; j < p.events.size(); ++j)
        if (p.events[i].name == p.events[j].name)
          throw ParseError("duplicate event '" + p.events[i].name + "'",
                           p.events[j].span);
    for (size_t i = 0; i < p.procs.size(); ++i)
      for (size_t j = i + 1; j < p.procs.size(); ++j)
        if (p.procs[i].name == p.procs[j].name)
          throw ParseError("duplicate procedure '" + p.procs[i].name + "'",
                           p.procs[j].span);
    for (size_t i = 0; i < p.policies.size(); ++i)
      for (size_t j = i + 1; j < p.policies.size(); ++j)
        if (p.policies[i].name == p.policies[j].name)
          throw ParseError("duplicate policy '" + p.policies[i].name + "'",
                           p.policies[j].span);
  }
};

}  // namespace

ParseResult parse_program(const std::string& text, const std::string& path) {
  ParseResult r;
  try {
    Parser parser(text);
    r.program = parser.parse();
  } catch (const ParseError& e) {
    r.diagnostics.push_back({Severity::Error, e.what(), e.span});
  } catch (const DefinitionError& e) {
    SourceSpan span = e.span;
    if (!span.valid()) span = {{1, 1}, {1, 1}};
    r.diagnostics.push_back({Severity::Error, e.what(), span});
  }
  if (!r.program && r.diagnostics.empty())
    r.diagnostics.push_back({Severity::Error, "parse failed in " + path, {{1, 1}, {1, 1}}});
  return r;
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

int expr_prec(const ExprPtr& e) {
  switch (e->kind) {
    case ExprKind::Ite: return 1;
    case ExprKind::Binary:
      switch (e->bin_op) {
        case BinOp::Or: return 2;
        case BinOp::And: return 3;
        case BinOp::Imp: return 2;
        case BinOp::Eq: case BinOp::Ne: case BinOp::Lt:
        case BinOp::Le: case BinOp::Gt: case BinOp::Ge: return 4;
        case BinOp::Add: case BinOp::Sub: return 5;
        case BinOp::Mul: case BinOp::Div: case BinOp::Mod: return 6;
      }
      return 0;
    case ExprKind::Unary: return 7;
    default: return 8;
  }
}

const char* binop_str(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Imp: return "==>";  // not in the surface grammar for exprs
  }
  return "?";
}

void print_expr(std::ostream& os, const ExprPtr& e, int min_prec) {
  int prec = expr_prec(e);
  bool paren = prec < min_prec;
  if (paren) os << "(";
  switch (e->kind) {
    case ExprKind::IntLit: os << e->int_val; break;
    case ExprKind::BoolLit: os << (e->int_val ? "true" : "false"); break;
    case ExprKind::Var:
    case ExprKind::LabelLit: os << e->name; break;
    case ExprKind::Unary:
      os << (e->un_op == UnOp::Neg ? "-" : "!");
      print_expr(os, e->args[0], 7);
      break;
    case ExprKind::Binary:
      print_expr(os, e->args[0], prec);
      os << " " << binop_str(e->bin_op) << " ";
      print_expr(os, e->args[1], prec + 1);
      break;
    case ExprKind::Ite:
      print_expr(os, e->args[0], 2);
      os << " ? ";
      print_expr(os, e->args[1], 1);
      os << " : ";
      print_expr(os, e->args[2], 1);
      break;
    case ExprKind::Nil: os << "nil"; break;
    case ExprKind::Snoc:
      os << "snoc(";
      print_expr(os, e->args[0], 0);
      os << ", ";
      print_expr(os, e->args[1], 0);
      os << ")";
      break;
    case ExprKind::Cat:
      os << "cat(";
      print_expr(os, e->args[0], 0);
      os << ", ";
      print_expr(os, e->args[1], 0);
      os << ")";
      break;
    case ExprKind::EventApp:
      os << e->name << "(";
      for (size_t i = 0; i < e->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, e->args[i], 0);
      }
      os << ")";
      break;
    case ExprKind::Len:
      os << "len(";
      print_expr(os, e->args[0], 0);
      os << ")";
      break;
    case ExprKind::Sum:
      os << "sum(";
      print_expr(os, e->args[0], 0);
      os << ")";
      break;
    case ExprKind::Contains:
      os << "contains(";
      print_expr(os, e->args[0], 0);
      os << ", ";
      print_expr(os, e->args[1], 0);
      os << ")";
      break;
    case ExprKind::CurrentTrace: os << "__tr"; break;
    case ExprKind::Attacker: os << "@att"; break;
  }
  if (paren) os << ")";
}

void print_assertion(std::ostream& os, const AssertionPtr& a, int depth);

void print_aatom(std::ostream& os, const AssertionPtr& a) {
  switch (a->kind) {
    case AssertKind::Pure:
      print_expr(os, a->e1, 2);  // keep '?:' parenthesized in atoms
      break;
    case AssertKind::Classify:
      print_expr(os, a->e1, 4);
      os << " :: ";
      print_expr(os, a->e2, 4);
      break;
    case AssertKind::Emp: os << "emp"; break;
    case AssertKind::PointsTo:
      print_expr(os, a->e1, 5);
      os << " |-> ";
      print_expr(os, a->e2, 5);
      break;
    case AssertKind::History:
      os << "History(";
      print_expr(os, a->e1, 0);
      os << ")";
      break;
    case AssertKind::PredApp:
      os << a->name << "(";
      for (size_t i = 0; i < a->args.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, a->args[i], 0);
      }
      os << ")";
      break;
    default:
      throw UsageError("assertion nesting has no surface form");
  }
}

void print_assertion(std::ostream& os, const AssertionPtr& a, int depth) {
  switch (a->kind) {
    case AssertKind::Exists:
    case AssertKind::Forall: {
      os << (a->kind == AssertKind::Exists ? "exists " : "forall ") << a->name;
      if (a->binder_sort != Sort::Int)
        os << ": " << sort_name(a->binder_sort);
      os << ". ";
      print_assertion(os, a->a1, depth);
      break;
    }
    case AssertKind::Imp:
      // Left side is star-level, right side full assertion (right assoc).
      if (a->a1->kind == AssertKind::Imp || a->a1->kind == AssertKind::Exists ||
          a->a1->kind == AssertKind::Forall)
        throw UsageError("assertion nesting has no surface form");
      print_assertion(os, a->a1, depth);
      os << " ==> ";
      print_assertion(os, a->a2, depth);
      break;
    case AssertKind::Star:
      print_assertion(os, a->a1, depth + 1);
      os << " &*& ";
      if (a->a2->kind == AssertKind::Star || a->a2->kind == AssertKind::Imp ||
          a->a2->kind == AssertKind::Exists || a->a2->kind == AssertKind::Forall)
        throw UsageError("assertion nesting has no surface form: "
                         "right-nested star/binder under star");
      print_aatom(os, a->a2);
      break;
    default:
      print_aatom(os, a);
      break;
  }
}

std::string indent_str(int n) { return std::string(2 * n, ' '); }

void print_command(std::ostream& os, const CommandPtr& c, int indent) {
  std::string pad = indent_str(indent);
  switch (c->kind) {
    case CmdKind::Skip: os << pad << "skip;\n"; break;
    case CmdKind::Assign:
      os << pad << c->var << " := " << format_expr(c->e1) << ";\n";
      break;
    case CmdKind::Load:
      os << pad << "load " << c->var << " <- [" << format_expr(c->e1) << "];\n";
      break;
    case CmdKind::Store:
      os << pad << "store [" << format_expr(c->e1) << "] <- " << format_expr(c->e2)
         << ";\n";
      break;
    case CmdKind::LockCmd: os << pad << "lock " << c->var << ";\n"; break;
    case CmdKind::UnlockCmd: os << pad << "unlock " << c->var << ";\n"; break;
    case CmdKind::Seq:
      print_command(os, c->c1, indent);
      print_command(os, c->c2, indent);
      break;
    case CmdKind::Par:
      os << pad << "par {\n";
      os << indent_str(indent + 1) << "requires: " << format_assertion(c->pre1) << ";\n";
      os << indent_str(indent + 1) << "ensures: " << format_assertion(c->post1) << ";\n";
      print_command(os, c->c1, indent + 1);
      os << pad << "} {\n";
      os << indent_str(indent + 1) << "requires: " << format_assertion(c->pre2) << ";\n";
      os << indent_str(indent + 1) << "ensures: " << format_assertion(c->post2) << ";\n";
      print_command(os, c->c2, indent + 1);
      os << pad << "}\n";
      break;
    case CmdKind::If:
      os << pad << "if (" << format_expr(c->e1) << ") {\n";
      print_command(os, c->c1, indent + 1);
      os << pad << "}";
      if (c->c2 && c->c2->kind != CmdKind::Skip) {
        os << " else {\n";
        print_command(os, c->c2, indent + 1);
        os << pad << "}";
      }
      os << "\n";
      break;
    case CmdKind::While:
      os << pad << "while (" << format_expr(c->e1) << ") invariant ("
         << format_assertion(c->inv) << ") {\n";
      print_command(os, c->c1, indent + 1);
      os << pad << "}\n";
      break;
    case CmdKind::Assume:
      os << pad << (c->policy_justified ? "release(" : "assume(")
         << format_assertion(c->inv) << ");\n";
      break;
    case CmdKind::Output:
      os << pad << "out[" << format_expr(c->e1) << "](" << format_expr(c->e2) << ");\n";
      break;
    case CmdKind::TraceEmit:
      os << pad << "trace(" << format_expr(c->e1) << ");\n";
      break;
    case CmdKind::AssertCmd:
      os << pad << "assert(" << format_assertion(c->inv) << ");\n";
      break;
    case CmdKind::SplitCmd:
      os << pad << "split(" << format_expr(c->e1) << ");\n";
      break;
  }
}

}  // namespace

std::string format_expr(const ExprPtr& e) {
  std::ostringstream os;
  print_expr(os, e, 0);
  return os.str();
}

std::string format_assertion(const AssertionPtr& a) {
  std::ostringstream os;
  print_assertion(os, a, 0);
  return os.str();
}

std::string format_command(const CommandPtr& c, int indent) {
  std::ostringstream os;
  print_command(os, c, indent);
  return os.str();
}

std::string format_program(const Program& p) {
  std::ostringstream os;
  Lattice def;
  if (!(p.lattice == def)) {
    os << "lattice { ";
    const auto& names = p.lattice.carrier();
    for (size_t i = 0; i < names.size(); ++i) os << (i ? ", " : "") << names[i];
    os << "; order: ";
    bool first = true;
    // Emit the covering pairs of the order (transitive reduction).
    int n = p.lattice.size();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b || !p.lattice.leq(a, b)) continue;
        bool covered = false;
        for (int m = 0; m < n; ++m)
          if (m != a && m != b && p.lattice.leq(a, m) && p.lattice.leq(m, b))
            covered = true;
        if (covered) continue;
        os << (first ? "" : ", ") << names[a] << " < " << names[b];
        first = false;
      }
    os << " }\n\n";
  }
  for (const auto& e : p.events) {
    os << "event " << e.name << "(";
    for (int i = 0; i < e.arity; ++i) os << (i ? ", int" : "int");
    os << ");\n";
  }
  if (!p.events.empty()) os << "\n";
  for (const auto& l : p.locks)
    os << "lock " << l.name << " invariant (" << format_assertion(l.invariant)
       << ");\n\n";
  for (const auto& pol : p.policies) {
    os << "policy " << pol.name << "(" << pol.trace_var;
    for (const auto& x : pol.params) os << ", " << x;
    os << ") { when: " << format_expr(pol.when)
       << "; release: " << format_assertion(pol.release) << "; }\n\n";
  }
  for (const auto& pr : p.procs) {
    os << "proc " << pr.name << "()\n";
    os << "  requires: " << format_assertion(pr.requires_) << "\n";
    os << "  ensures: " << format_assertion(pr.ensures_) << "\n";
    os << "{\n";
    print_command(os, pr.body, 1);
    os << "}\n\n";
  }
  return os.str();
}

}  // namespace vdc
