#pragma once

// PDDL front end: tokenizer, typed AST, domain/problem parsers, printer and
// grounder for the STRIPS + typing + negative-preconditions +
// conditional-effects fragment.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace planmon::pddl {

// ---------------------------------------------------------------------------
// Errors

struct SourcePos {
    int line = 0;
    int col = 0;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, SourcePos pos)
        : std::runtime_error("parse error at " + std::to_string(pos.line) + ":" +
                             std::to_string(pos.col) + ": " + message),
          pos_(pos) {}

    SourcePos pos() const { return pos_; }

private:
    SourcePos pos_;
};

// ---------------------------------------------------------------------------
// AST

struct TypedName {
    std::string name;
    std::string type;

    bool operator==(const TypedName&) const = default;
};

struct PredicateSignature {
    std::string name;
    std::vector<TypedName> params;

    std::size_t arity() const { return params.size(); }
    bool operator==(const PredicateSignature&) const = default;
};

struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    bool operator==(const Atom&) const = default;
};

struct Literal {
    Atom atom;
    bool positive = true;

    bool operator==(const Literal&) const = default;
};

// Universally quantified conditional effect.  An empty condition fires
// unconditionally for every binding of the quantified variable.
struct ConditionalEffect {
    TypedName variable;
    std::vector<Literal> condition;
    std::vector<Literal> consequence;

    bool operator==(const ConditionalEffect&) const = default;
};

using Effect = std::variant<Literal, ConditionalEffect>;

struct ActionSchema {
    std::string name;
    std::vector<TypedName> params;
    std::vector<Literal> precondition;
    std::vector<Effect> effects;

    bool operator==(const ActionSchema&) const = default;
};

struct Domain {
    std::string name;
    std::vector<std::string> requirements;
    std::vector<TypedName> types; // parent edges; "object" is the implicit root
    std::vector<PredicateSignature> predicates;
    std::vector<ActionSchema> actions;

    bool operator==(const Domain&) const = default;

    const PredicateSignature* find_predicate(std::string_view pred) const {
        for (const auto& p : predicates)
            if (p.name == pred) return &p;
        return nullptr;
    }

    bool type_declared(std::string_view t) const {
        if (t == "object") return true;
        for (const auto& ty : types)
            if (ty.name == t) return true;
        return false;
    }

    // True if `t` equals `ancestor` or is a declared descendant of it.
    bool is_subtype(std::string_view t, std::string_view ancestor) const {
        if (ancestor == "object") return type_declared(t);
        std::string cur(t);
        while (true) {
            if (cur == ancestor) return true;
            if (cur == "object") return false;
            const TypedName* edge = nullptr;
            for (const auto& ty : types)
                if (ty.name == cur) { edge = &ty; break; }
            if (!edge) return false;
            cur = edge->type;
        }
    }
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::vector<TypedName> objects;
    std::vector<Atom> init;
    std::vector<Literal> goal;

    bool operator==(const Problem&) const = default;
};

// ---------------------------------------------------------------------------
// Tokenizer

namespace detail {

enum class TokenKind { LParen, RParen, Symbol, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    SourcePos pos;
};

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) : text_(text) {}

    const Token& peek() {
        if (!lookahead_) lookahead_ = scan();
        return *lookahead_;
    }

    Token next() {
        Token t = peek();
        lookahead_.reset();
        return t;
    }

    SourcePos pos() const { return {line_, col_}; }

private:
    Token scan() {
        skip_trivia();
        Token t;
        t.pos = {line_, col_};
        if (at_end()) {
            t.kind = TokenKind::End;
            return t;
        }
        char c = text_[idx_];
        if (c == '(') {
            advance();
            t.kind = TokenKind::LParen;
            t.text = "(";
            return t;
        }
        if (c == ')') {
            advance();
            t.kind = TokenKind::RParen;
            t.text = ")";
            return t;
        }
        t.kind = TokenKind::Symbol;
        while (!at_end() && !is_delim(text_[idx_])) {
            t.text.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(text_[idx_]))));
            advance();
        }
        return t;
    }

    void skip_trivia() {
        while (!at_end()) {
            char c = text_[idx_];
            if (c == ';') {
                while (!at_end() && text_[idx_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    static bool is_delim(char c) {
        return c == '(' || c == ')' || c == ';' ||
               std::isspace(static_cast<unsigned char>(c));
    }

    bool at_end() const { return idx_ >= text_.size(); }

    void advance() {
        if (text_[idx_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++idx_;
    }

    std::string_view text_;
    std::size_t idx_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::optional<Token> lookahead_;
};

inline Token expect(Tokenizer& tz, TokenKind kind, const char* what) {
    Token t = tz.next();
    if (t.kind != kind) {
        std::string got = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(std::string("expected ") + what + ", got " + got, t.pos);
    }
    return t;
}

inline Token expect_symbol(Tokenizer& tz, std::string_view text) {
    Token t = expect(tz, TokenKind::Symbol, "symbol");
    if (t.text != text)
        throw ParseError("expected '" + std::string(text) + "', got '" + t.text + "'", t.pos);
    return t;
}

// Parses "n1 n2 - t n3 n4 - u n5" style typed lists up to the closing paren
// (which is left unconsumed).  Names without a type default to `fallback`.
inline std::vector<TypedName> parse_typed_list(Tokenizer& tz, const std::string& fallback) {
    std::vector<TypedName> out;
    std::vector<std::size_t> pending;
    while (tz.peek().kind == TokenKind::Symbol) {
        Token t = tz.next();
        if (t.text == "-") {
            Token ty = expect(tz, TokenKind::Symbol, "type name");
            if (pending.empty())
                throw ParseError("dangling '-' in typed list", t.pos);
            for (std::size_t i : pending) out[i].type = ty.text;
            pending.clear();
        } else {
            pending.push_back(out.size());
            out.push_back({t.text, fallback});
        }
    }
    return out;
}

inline Atom parse_atom_body(Tokenizer& tz) {
    Atom a;
    a.predicate = expect(tz, TokenKind::Symbol, "predicate name").text;
    while (tz.peek().kind == TokenKind::Symbol) a.args.push_back(tz.next().text);
    expect(tz, TokenKind::RParen, "')'");
    return a;
}

// Parses "(pred ...)" or "(not (pred ...))".  Double negation is rejected.
inline Literal parse_literal(Tokenizer& tz) {
    Token open = expect(tz, TokenKind::LParen, "'('");
    if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not") {
        tz.next();
        Token inner = expect(tz, TokenKind::LParen, "'('");
        if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not")
            throw ParseError("double negation is not allowed", inner.pos);
        Literal lit;
        lit.atom = parse_atom_body(tz);
        lit.positive = false;
        expect(tz, TokenKind::RParen, "')'");
        return lit;
    }
    (void)open;
    Literal lit;
    lit.atom = parse_atom_body(tz);
    return lit;
}

// Parses a literal conjunction: "(and L...)", a single literal, or "(and)".
inline std::vector<Literal> parse_conjunction(Tokenizer& tz) {
    Token open = expect(tz, TokenKind::LParen, "'('");
    std::vector<Literal> lits;
    if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "and") {
        tz.next();
        while (tz.peek().kind == TokenKind::LParen) lits.push_back(parse_literal(tz));
        expect(tz, TokenKind::RParen, "')'");
        return lits;
    }
    if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not") {
        tz.next();
        Token inner = expect(tz, TokenKind::LParen, "'('");
        if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not")
            throw ParseError("double negation is not allowed", inner.pos);
        Literal lit;
        lit.atom = parse_atom_body(tz);
        lit.positive = false;
        expect(tz, TokenKind::RParen, "')'");
        lits.push_back(lit);
        return lits;
    }
    (void)open;
    Literal lit;
    lit.atom = parse_atom_body(tz);
    lits.push_back(lit);
    return lits;
}

inline ConditionalEffect parse_forall(Tokenizer& tz) {
    ConditionalEffect ce;
    expect(tz, TokenKind::LParen, "'('");
    auto vars = parse_typed_list(tz, "object");
    expect(tz, TokenKind::RParen, "')'");
    if (vars.size() != 1)
        throw ParseError("forall must quantify exactly one variable", tz.pos());
    ce.variable = vars[0];
    if (ce.variable.name.empty() || ce.variable.name[0] != '?')
        throw ParseError("forall variable must start with '?'", tz.pos());

    Token open = expect(tz, TokenKind::LParen, "'('");
    if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "when") {
        tz.next();
        ce.condition = parse_conjunction(tz);
        ce.consequence = parse_conjunction(tz);
        expect(tz, TokenKind::RParen, "')'");
    } else {
        // Unconditional quantified effect: (forall (?v - t) (lit)).
        if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not") {
            tz.next();
            expect(tz, TokenKind::LParen, "'('");
            Literal lit;
            lit.atom = parse_atom_body(tz);
            lit.positive = false;
            expect(tz, TokenKind::RParen, "')'");
            ce.consequence.push_back(lit);
        } else {
            Literal lit;
            lit.atom = parse_atom_body(tz);
            ce.consequence.push_back(lit);
        }
        (void)open;
    }
    return ce;
}

// Effect body: "(and E...)" or a single effect element.
inline std::vector<Effect> parse_effects(Tokenizer& tz) {
    std::vector<Effect> out;
    expect(tz, TokenKind::LParen, "'('");
    bool conj = tz.peek().kind == TokenKind::Symbol && tz.peek().text == "and";
    if (conj) tz.next();

    auto parse_one_open = [&](Token first) -> Effect {
        // `first` is the '(' of the element; dispatch on the next symbol.
        (void)first;
        if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "forall") {
            tz.next();
            ConditionalEffect ce = parse_forall(tz);
            expect(tz, TokenKind::RParen, "')'");
            return ce;
        }
        if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not") {
            tz.next();
            Token inner = expect(tz, TokenKind::LParen, "'('");
            if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not")
                throw ParseError("double negation is not allowed", inner.pos);
            Literal lit;
            lit.atom = parse_atom_body(tz);
            lit.positive = false;
            expect(tz, TokenKind::RParen, "')'");
            return lit;
        }
        Literal lit;
        lit.atom = parse_atom_body(tz);
        return lit;
    };

    if (conj) {
        while (tz.peek().kind == TokenKind::LParen) {
            Token open = tz.next();
            out.push_back(parse_one_open(open));
        }
        expect(tz, TokenKind::RParen, "')'");
    } else {
        // A bare literal / forall without the surrounding (and ...): the '('
        // already consumed above opens the element itself.
        if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "forall") {
            tz.next();
            ConditionalEffect ce = parse_forall(tz);
            out.push_back(ce);
            expect(tz, TokenKind::RParen, "')'");
        } else if (tz.peek().kind == TokenKind::Symbol && tz.peek().text == "not") {
            tz.next();
            expect(tz, TokenKind::LParen, "'('");
            Literal lit;
            lit.atom = parse_atom_body(tz);
            lit.positive = false;
            expect(tz, TokenKind::RParen, "')'");
            out.push_back(lit);
        } else {
            Literal lit;
            lit.atom = parse_atom_body(tz);
            out.push_back(lit);
        }
    }
    return out;
}

inline const std::set<std::string>& supported_requirements() {
    static const std::set<std::string> reqs = {
        ":strips", ":typing", ":negative-preconditions", ":conditional-effects"};
    return reqs;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Semantic validation helpers

namespace detail {

inline void check_atom_against_signature(const Domain& d, const Atom& atom,
                                         SourcePos pos) {
    const PredicateSignature* sig = d.find_predicate(atom.predicate);
    if (!sig)
        throw ParseError("unknown predicate '" + atom.predicate + "'", pos);
    if (sig->arity() != atom.args.size())
        throw ParseError("arity mismatch for '" + atom.predicate + "': expected " +
                             std::to_string(sig->arity()) + " arguments, got " +
                             std::to_string(atom.args.size()),
                         pos);
}

// Variables usable inside a schema body: parameters plus (for conditional
// effects) the quantified variable.
inline void check_schema_literal(const Domain& d, const ActionSchema& schema,
                                 const Literal& lit, const TypedName* quantified,
                                 SourcePos pos) {
    check_atom_against_signature(d, lit.atom, pos);
    const PredicateSignature* sig = d.find_predicate(lit.atom.predicate);
    for (std::size_t i = 0; i < lit.atom.args.size(); ++i) {
        const std::string& arg = lit.atom.args[i];
        if (arg.empty() || arg[0] != '?')
            throw ParseError("constant '" + arg + "' in action '" + schema.name +
                                 "'; schemas may only use parameters",
                             pos);
        const TypedName* var = nullptr;
        for (const auto& p : schema.params)
            if (p.name == arg) { var = &p; break; }
        if (!var && quantified && quantified->name == arg) var = quantified;
        if (!var)
            throw ParseError("unbound variable '" + arg + "' in action '" +
                                 schema.name + "'",
                             pos);
        if (!d.is_subtype(var->type, sig->params[i].type))
            throw ParseError("variable '" + arg + "' of type '" + var->type +
                                 "' is not a subtype of '" + sig->params[i].type +
                                 "' required by predicate '" + lit.atom.predicate + "'",
                             pos);
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// parse_domain

inline Domain parse_domain(std::string_view text) {
    using namespace detail;
    Tokenizer tz(text);
    Domain d;

    expect(tz, TokenKind::LParen, "'('");
    expect_symbol(tz, "define");
    expect(tz, TokenKind::LParen, "'('");
    expect_symbol(tz, "domain");
    d.name = expect(tz, TokenKind::Symbol, "domain name").text;
    expect(tz, TokenKind::RParen, "')'");

    while (tz.peek().kind == TokenKind::LParen) {
        Token open = tz.next();
        Token section = expect(tz, TokenKind::Symbol, "section keyword");
        if (section.text == ":requirements") {
            while (tz.peek().kind == TokenKind::Symbol) {
                Token r = tz.next();
                if (!supported_requirements().count(r.text))
                    throw ParseError("unsupported requirement '" + r.text + "'", r.pos);
                d.requirements.push_back(r.text);
            }
            expect(tz, TokenKind::RParen, "')'");
        } else if (section.text == ":types") {
            d.types = parse_typed_list(tz, "object");
            expect(tz, TokenKind::RParen, "')'");
            std::set<std::string> seen;
            for (const auto& t : d.types) {
                if (t.name == "object")
                    throw ParseError("'object' is the implicit root type and cannot be redeclared",
                                     section.pos);
                if (!seen.insert(t.name).second)
                    throw ParseError("duplicate type '" + t.name + "'", section.pos);
            }
            for (const auto& t : d.types)
                if (!d.type_declared(t.type))
                    throw ParseError("unknown parent type '" + t.type + "'", section.pos);
        } else if (section.text == ":predicates") {
            while (tz.peek().kind == TokenKind::LParen) {
                tz.next();
                PredicateSignature sig;
                Token name = expect(tz, TokenKind::Symbol, "predicate name");
                sig.name = name.text;
                sig.params = parse_typed_list(tz, "object");
                expect(tz, TokenKind::RParen, "')'");
                for (const auto& p : sig.params) {
                    if (p.name.empty() || p.name[0] != '?')
                        throw ParseError("predicate parameter '" + p.name +
                                             "' must start with '?'",
                                         name.pos);
                    if (!d.type_declared(p.type))
                        throw ParseError("unknown type '" + p.type + "' in predicate '" +
                                             sig.name + "'",
                                         name.pos);
                }
                if (d.find_predicate(sig.name))
                    throw ParseError("duplicate predicate '" + sig.name + "'", name.pos);
                d.predicates.push_back(std::move(sig));
            }
            expect(tz, TokenKind::RParen, "')'");
        } else if (section.text == ":action") {
            ActionSchema schema;
            Token name = expect(tz, TokenKind::Symbol, "action name");
            schema.name = name.text;
            for (const auto& a : d.actions)
                if (a.name == schema.name)
                    throw ParseError("duplicate action '" + schema.name + "'", name.pos);

            expect_symbol(tz, ":parameters");
            expect(tz, TokenKind::LParen, "'('");
            schema.params = parse_typed_list(tz, "object");
            expect(tz, TokenKind::RParen, "')'");
            std::set<std::string> seen;
            for (const auto& p : schema.params) {
                if (p.name.empty() || p.name[0] != '?')
                    throw ParseError("action parameter '" + p.name + "' must start with '?'",
                                     name.pos);
                if (!seen.insert(p.name).second)
                    throw ParseError("duplicate parameter '" + p.name + "'", name.pos);
                if (!d.type_declared(p.type))
                    throw ParseError("unknown type '" + p.type + "' in action '" +
                                         schema.name + "'",
                                     name.pos);
            }

            while (tz.peek().kind == TokenKind::Symbol) {
                Token kw = tz.next();
                if (kw.text == ":precondition") {
                    schema.precondition = parse_conjunction(tz);
                } else if (kw.text == ":effect") {
                    schema.effects = parse_effects(tz);
                } else {
                    throw ParseError("unexpected keyword '" + kw.text + "' in action", kw.pos);
                }
            }
            expect(tz, TokenKind::RParen, "')'");

            for (const auto& lit : schema.precondition)
                check_schema_literal(d, schema, lit, nullptr, name.pos);
            for (const auto& eff : schema.effects) {
                if (std::holds_alternative<Literal>(eff)) {
                    check_schema_literal(d, schema, std::get<Literal>(eff), nullptr, name.pos);
                } else {
                    const auto& ce = std::get<ConditionalEffect>(eff);
                    if (!d.type_declared(ce.variable.type))
                        throw ParseError("unknown type '" + ce.variable.type +
                                             "' in forall of action '" + schema.name + "'",
                                         name.pos);
                    for (const auto& lit : ce.condition)
                        check_schema_literal(d, schema, lit, &ce.variable, name.pos);
                    for (const auto& lit : ce.consequence)
                        check_schema_literal(d, schema, lit, &ce.variable, name.pos);
                }
            }
            d.actions.push_back(std::move(schema));
        } else {
            throw ParseError("unknown section '" + section.text + "'", section.pos);
        }
        (void)open;
    }
    expect(tz, TokenKind::RParen, "')'");
    Token trailing = tz.next();
    if (trailing.kind != TokenKind::End)
        throw ParseError("trailing input after domain definition", trailing.pos);
    return d;
}

// ---------------------------------------------------------------------------
// parse_problem

inline Problem parse_problem(std::string_view text, const Domain& d) {
    using namespace detail;
    Tokenizer tz(text);
    Problem p;

    expect(tz, TokenKind::LParen, "'('");
    expect_symbol(tz, "define");
    expect(tz, TokenKind::LParen, "'('");
    expect_symbol(tz, "problem");
    p.name = expect(tz, TokenKind::Symbol, "problem name").text;
    expect(tz, TokenKind::RParen, "')'");

    auto object_type = [&](const std::string& obj) -> const std::string* {
        for (const auto& o : p.objects)
            if (o.name == obj) return &o.type;
        return nullptr;
    };

    auto check_ground_atom = [&](const Atom& atom, SourcePos pos, const char* where) {
        check_atom_against_signature(d, atom, pos);
        const PredicateSignature* sig = d.find_predicate(atom.predicate);
        for (std::size_t i = 0; i < atom.args.size(); ++i) {
            const std::string& arg = atom.args[i];
            if (!arg.empty() && arg[0] == '?')
                throw ParseError(std::string("non-ground atom in ") + where +
                                     ": variable '" + arg + "'",
                                 pos);
            const std::string* ty = object_type(arg);
            if (!ty)
                throw ParseError("unknown object '" + arg + "' in " + where, pos);
            if (!d.is_subtype(*ty, sig->params[i].type))
                throw ParseError("object '" + arg + "' of type '" + *ty +
                                     "' is not a subtype of '" + sig->params[i].type +
                                     "' required by predicate '" + atom.predicate + "'",
                                 pos);
        }
    };

    while (tz.peek().kind == TokenKind::LParen) {
        Token open = tz.next();
        Token section = expect(tz, TokenKind::Symbol, "section keyword");
        if (section.text == ":domain") {
            Token dn = expect(tz, TokenKind::Symbol, "domain name");
            p.domain_name = dn.text;
            if (p.domain_name != d.name)
                throw ParseError("problem references domain '" + p.domain_name +
                                     "' but '" + d.name + "' was supplied",
                                 dn.pos);
            expect(tz, TokenKind::RParen, "')'");
        } else if (section.text == ":objects") {
            p.objects = parse_typed_list(tz, "object");
            expect(tz, TokenKind::RParen, "')'");
            std::set<std::string> seen;
            for (const auto& o : p.objects) {
                if (!seen.insert(o.name).second)
                    throw ParseError("duplicate object '" + o.name + "'", section.pos);
                if (!d.type_declared(o.type))
                    throw ParseError("unknown type '" + o.type + "' for object '" +
                                         o.name + "'",
                                     section.pos);
            }
        } else if (section.text == ":init") {
            while (tz.peek().kind == TokenKind::LParen) {
                Token ap = tz.next();
                Atom a = parse_atom_body(tz);
                check_ground_atom(a, ap.pos, ":init");
                p.init.push_back(std::move(a));
            }
            expect(tz, TokenKind::RParen, "')'");
        } else if (section.text == ":goal") {
            p.goal = parse_conjunction(tz);
            expect(tz, TokenKind::RParen, "')'");
            for (const auto& lit : p.goal)
                check_ground_atom(lit.atom, section.pos, ":goal");
        } else {
            throw ParseError("unknown section '" + section.text + "'", section.pos);
        }
        (void)open;
    }
    expect(tz, TokenKind::RParen, "')'");
    Token trailing = tz.next();
    if (trailing.kind != TokenKind::End)
        throw ParseError("trailing input after problem definition", trailing.pos);
    return p;
}

// ---------------------------------------------------------------------------
// Printing (canonical form; parse(print(x)) == x)

namespace detail {

inline void print_atom(std::ostream& os, const Atom& a) {
    os << '(' << a.predicate;
    for (const auto& arg : a.args) os << ' ' << arg;
    os << ')';
}

inline void print_literal(std::ostream& os, const Literal& lit) {
    if (!lit.positive) os << "(not ";
    print_atom(os, lit.atom);
    if (!lit.positive) os << ')';
}

inline void print_conjunction(std::ostream& os, const std::vector<Literal>& lits) {
    os << "(and";
    for (const auto& l : lits) {
        os << ' ';
        print_literal(os, l);
    }
    os << ')';
}

} // namespace detail

inline std::string print_domain(const Domain& d) {
    std::ostringstream os;
    os << "(define (domain " << d.name << ")\n";
    if (!d.requirements.empty()) {
        os << "  (:requirements";
        for (const auto& r : d.requirements) os << ' ' << r;
        os << ")\n";
    }
    if (!d.types.empty()) {
        os << "  (:types\n";
        for (const auto& t : d.types) os << "    " << t.name << " - " << t.type << "\n";
        os << "  )\n";
    }
    os << "  (:predicates\n";
    for (const auto& p : d.predicates) {
        os << "    (" << p.name;
        for (const auto& a : p.params) os << ' ' << a.name << " - " << a.type;
        os << ")\n";
    }
    os << "  )\n";
    for (const auto& schema : d.actions) {
        os << "  (:action " << schema.name << "\n    :parameters (";
        for (std::size_t i = 0; i < schema.params.size(); ++i) {
            if (i) os << ' ';
            os << schema.params[i].name << " - " << schema.params[i].type;
        }
        os << ")\n    :precondition ";
        detail::print_conjunction(os, schema.precondition);
        os << "\n    :effect (and";
        for (const auto& eff : schema.effects) {
            os << ' ';
            if (std::holds_alternative<Literal>(eff)) {
                detail::print_literal(os, std::get<Literal>(eff));
            } else {
                const auto& ce = std::get<ConditionalEffect>(eff);
                os << "(forall (" << ce.variable.name << " - " << ce.variable.type
                   << ") (when ";
                detail::print_conjunction(os, ce.condition);
                os << ' ';
                detail::print_conjunction(os, ce.consequence);
                os << "))";
            }
        }
        os << ")\n  )\n";
    }
    os << ")\n";
    return os.str();
}

inline std::string print_problem(const Problem& p) {
    std::ostringstream os;
    os << "(define (problem " << p.name << ")\n";
    os << "  (:domain " << p.domain_name << ")\n";
    os << "  (:objects\n";
    for (const auto& o : p.objects) os << "    " << o.name << " - " << o.type << "\n";
    os << "  )\n  (:init\n";
    for (const auto& a : p.init) {
        os << "    ";
        detail::print_atom(os, a);
        os << "\n";
    }
    os << "  )\n  (:goal ";
    detail::print_conjunction(os, p.goal);
    os << ")\n)\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Grounding

struct GroundLiteral {
    std::uint32_t atom = 0;
    bool positive = true;

    bool operator==(const GroundLiteral&) const = default;
};

// Conditional effect kept schematic: argument slots are either object ids or
// kVarSlot for the quantified variable; the quantifier is expanded against
// the problem's object universe when the action is applied.
struct GroundConditional {
    static constexpr std::int32_t kVarSlot = -1;

    struct TemplLiteral {
        std::uint32_t predicate = 0;
        std::vector<std::int32_t> args;
        bool positive = true;
    };

    std::string var_type;
    std::vector<TemplLiteral> condition;
    std::vector<TemplLiteral> consequence;
};

struct GroundAction {
    std::string schema;
    std::vector<std::string> args;
    std::vector<GroundLiteral> precondition;
    std::vector<std::uint32_t> add_atoms;
    std::vector<std::uint32_t> del_atoms;
    std::vector<GroundConditional> conditionals;

    std::string display() const {
        std::string s = schema + "(";
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (i) s += ",";
            s += args[i];
        }
        s += ")";
        return s;
    }
};

class GroundingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable grounded view of a (domain, problem) pair: interned objects,
// predicates and type-consistent ground atoms, plus the grounded action set
// sorted by (schema name, argument tuple).
struct Grounding {
    const Domain* domain = nullptr;

    std::vector<std::string> object_names;
    std::vector<std::string> object_types;
    std::unordered_map<std::string, std::uint32_t> object_index;

    std::vector<std::string> predicate_names;
    std::unordered_map<std::string, std::uint32_t> predicate_index;

    // Atom table: id -> (predicate, args); key -> id.
    struct AtomInfo {
        std::uint32_t predicate;
        std::vector<std::uint32_t> args;
    };
    std::vector<AtomInfo> atoms;
    std::map<std::vector<std::uint32_t>, std::uint32_t> atom_index; // key: [pred, args...]

    std::vector<GroundAction> actions;

    // Object ids per type, sorted by object name order within the type.
    std::map<std::string, std::vector<std::uint32_t>> extensions;

    std::size_t atom_count() const { return atoms.size(); }

    std::optional<std::uint32_t> find_atom(std::uint32_t pred,
                                           const std::vector<std::uint32_t>& args) const {
        std::vector<std::uint32_t> key;
        key.reserve(args.size() + 1);
        key.push_back(pred);
        key.insert(key.end(), args.begin(), args.end());
        auto it = atom_index.find(key);
        if (it == atom_index.end()) return std::nullopt;
        return it->second;
    }

    std::optional<std::uint32_t> find_atom_by_name(std::string_view pred,
                                                   const std::vector<std::string>& args) const {
        auto pit = predicate_index.find(std::string(pred));
        if (pit == predicate_index.end()) return std::nullopt;
        std::vector<std::uint32_t> ids;
        ids.reserve(args.size());
        for (const auto& a : args) {
            auto oit = object_index.find(a);
            if (oit == object_index.end()) return std::nullopt;
            ids.push_back(oit->second);
        }
        return find_atom(pit->second, ids);
    }

    std::uint32_t require_atom_by_name(std::string_view pred,
                                       const std::vector<std::string>& args) const {
        auto id = find_atom_by_name(pred, args);
        if (!id) {
            std::string msg = "no such ground atom: (" + std::string(pred);
            for (const auto& a : args) msg += " " + a;
            throw GroundingError(msg + ")");
        }
        return *id;
    }

    std::string atom_name(std::uint32_t id) const {
        const AtomInfo& info = atoms[id];
        std::string s = "(" + predicate_names[info.predicate];
        for (auto a : info.args) s += " " + object_names[a];
        return s + ")";
    }

    GroundLiteral ground_literal(const Literal& lit) const {
        GroundLiteral gl;
        gl.atom = require_atom_by_name(lit.atom.predicate, lit.atom.args);
        gl.positive = lit.positive;
        return gl;
    }

    std::vector<GroundLiteral> ground_literals(const std::vector<Literal>& lits) const {
        std::vector<GroundLiteral> out;
        out.reserve(lits.size());
        for (const auto& l : lits) out.push_back(ground_literal(l));
        return out;
    }

    const std::vector<std::uint32_t>& extension(const std::string& type) const {
        static const std::vector<std::uint32_t> empty;
        auto it = extensions.find(type);
        return it == extensions.end() ? empty : it->second;
    }
};

inline Grounding ground(const Domain& d, const Problem& p) {
    Grounding g;
    g.domain = &d;

    for (const auto& o : p.objects) {
        g.object_index.emplace(o.name, static_cast<std::uint32_t>(g.object_names.size()));
        g.object_names.push_back(o.name);
        g.object_types.push_back(o.type);
    }

    // Type extensions over the problem's objects.
    auto extension_of = [&](const std::string& type) -> std::vector<std::uint32_t> {
        std::vector<std::uint32_t> out;
        for (std::uint32_t i = 0; i < g.object_names.size(); ++i)
            if (d.is_subtype(g.object_types[i], type)) out.push_back(i);
        return out;
    };
    g.extensions["object"] = extension_of("object");
    for (const auto& t : d.types) g.extensions[t.name] = extension_of(t.name);

    // Atom universe: every type-consistent predicate instantiation.
    for (const auto& sig : d.predicates) {
        std::uint32_t pid = static_cast<std::uint32_t>(g.predicate_names.size());
        g.predicate_index.emplace(sig.name, pid);
        g.predicate_names.push_back(sig.name);

        std::vector<std::uint32_t> tuple(sig.arity(), 0);
        std::vector<const std::vector<std::uint32_t>*> pools;
        pools.reserve(sig.arity());
        for (const auto& param : sig.params) pools.push_back(&g.extension(param.type));

        // Odometer over argument pools.
        std::vector<std::size_t> idx(sig.arity(), 0);
        bool any_empty = false;
        for (const auto* pool : pools)
            if (pool->empty()) any_empty = true;
        if (any_empty && sig.arity() > 0) continue;
        while (true) {
            for (std::size_t i = 0; i < sig.arity(); ++i) tuple[i] = (*pools[i])[idx[i]];
            std::vector<std::uint32_t> key;
            key.reserve(tuple.size() + 1);
            key.push_back(pid);
            key.insert(key.end(), tuple.begin(), tuple.end());
            std::uint32_t aid = static_cast<std::uint32_t>(g.atoms.size());
            g.atom_index.emplace(std::move(key), aid);
            g.atoms.push_back({pid, tuple});

            std::size_t k = sig.arity();
            while (k > 0) {
                --k;
                if (++idx[k] < pools[k]->size()) break;
                idx[k] = 0;
                if (k == 0) goto done_tuples;
            }
            if (sig.arity() == 0) break;
        }
    done_tuples:;
    }

    // Ground the action schemas.
    for (const auto& schema : d.actions) {
        std::vector<const std::vector<std::uint32_t>*> pools;
        pools.reserve(schema.params.size());
        for (const auto& param : schema.params) pools.push_back(&g.extension(param.type));
        bool any_empty = false;
        for (const auto* pool : pools)
            if (pool->empty()) any_empty = true;
        if (any_empty && !schema.params.empty()) continue;

        std::vector<std::size_t> idx(schema.params.size(), 0);
        while (true) {
            std::unordered_map<std::string, std::uint32_t> binding;
            for (std::size_t i = 0; i < schema.params.size(); ++i)
                binding[schema.params[i].name] = (*pools[i])[idx[i]];

            auto instantiate =
                [&](const Literal& lit) -> std::optional<GroundLiteral> {
                std::uint32_t pid = g.predicate_index.at(lit.atom.predicate);
                std::vector<std::uint32_t> args;
                args.reserve(lit.atom.args.size());
                for (const auto& v : lit.atom.args) args.push_back(binding.at(v));
                auto aid = g.find_atom(pid, args);
                if (!aid) return std::nullopt;
                return GroundLiteral{*aid, lit.positive};
            };

            GroundAction ga;
            ga.schema = schema.name;
            for (std::size_t i = 0; i < schema.params.size(); ++i)
                ga.args.push_back(g.object_names[(*pools[i])[idx[i]]]);

            bool ill_typed = false;
            for (const auto& lit : schema.precondition) {
                auto gl = instantiate(lit);
                if (!gl) { ill_typed = true; break; }
                ga.precondition.push_back(*gl);
            }
            if (!ill_typed) {
                for (const auto& eff : schema.effects) {
                    if (std::holds_alternative<Literal>(eff)) {
                        auto gl = instantiate(std::get<Literal>(eff));
                        if (!gl) { ill_typed = true; break; }
                        if (gl->positive)
                            ga.add_atoms.push_back(gl->atom);
                        else
                            ga.del_atoms.push_back(gl->atom);
                    } else {
                        const auto& ce = std::get<ConditionalEffect>(eff);
                        GroundConditional gc;
                        gc.var_type = ce.variable.type;
                        auto make_templ = [&](const Literal& lit)
                            -> GroundConditional::TemplLiteral {
                            GroundConditional::TemplLiteral tl;
                            tl.predicate = g.predicate_index.at(lit.atom.predicate);
                            tl.positive = lit.positive;
                            for (const auto& v : lit.atom.args) {
                                if (v == ce.variable.name)
                                    tl.args.push_back(GroundConditional::kVarSlot);
                                else
                                    tl.args.push_back(
                                        static_cast<std::int32_t>(binding.at(v)));
                            }
                            return tl;
                        };
                        for (const auto& lit : ce.condition)
                            gc.condition.push_back(make_templ(lit));
                        for (const auto& lit : ce.consequence)
                            gc.consequence.push_back(make_templ(lit));
                        ga.conditionals.push_back(std::move(gc));
                    }
                }
            }
            if (!ill_typed) g.actions.push_back(std::move(ga));

            if (schema.params.empty()) break;
            std::size_t k = schema.params.size();
            bool rolled_over = true;
            while (k > 0) {
                --k;
                if (++idx[k] < pools[k]->size()) { rolled_over = false; break; }
                idx[k] = 0;
            }
            if (rolled_over) break;
        }
    }

    std::sort(g.actions.begin(), g.actions.end(),
              [](const GroundAction& a, const GroundAction& b) {
                  if (a.schema != b.schema) return a.schema < b.schema;
                  return a.args < b.args;
              });
    return g;
}

} // namespace planmon::pddl
