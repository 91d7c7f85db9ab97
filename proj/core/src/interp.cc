// Copyright 2026 The qxplain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qx/interp.h"

#include <cctype>
#include <cmath>

#include "qx/common.h"
#include "qx/error.h"

namespace qx {

std::string_view ConstraintOpName(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::kEq: return "EQ";
    case ConstraintOp::kLt: return "LT";
    case ConstraintOp::kGt: return "GT";
    case ConstraintOp::kLe: return "LE";
    case ConstraintOp::kGe: return "GE";
    case ConstraintOp::kRange: return "RANGE";
  }
  return "EQ";
}

namespace {

std::optional<ConstraintOp> OpFromName(std::string_view name) {
  for (auto op : {ConstraintOp::kEq, ConstraintOp::kLt, ConstraintOp::kGt,
                  ConstraintOp::kLe, ConstraintOp::kGe, ConstraintOp::kRange}) {
    if (ConstraintOpName(op) == name) return op;
  }
  return std::nullopt;
}

std::string_view OpSymbol(ConstraintOp op) {
  switch (op) {
    case ConstraintOp::kLt: return "<";
    case ConstraintOp::kGt: return ">";
    case ConstraintOp::kLe: return "<=";
    case ConstraintOp::kGe: return ">=";
    default: return "=";
  }
}

}  // namespace

FeatureConstraint FeatureConstraint::Numeric(std::string feature,
                                             ConstraintOp op, double value) {
  FeatureConstraint c;
  c.feature = std::move(feature);
  c.op = op;
  c.value = value;
  return c;
}

FeatureConstraint FeatureConstraint::Categorical(std::string feature,
                                                 std::string value) {
  FeatureConstraint c;
  c.feature = std::move(feature);
  c.op = ConstraintOp::kEq;
  c.category = std::move(value);
  return c;
}

FeatureConstraint FeatureConstraint::Range(std::string feature, double lower,
                                           double upper) {
  if (!(lower < upper)) {
    throw Error(ErrorCode::kInvalidArgument,
                "range on " + feature + " requires lower < upper",
                {{"lower", FormatExact(lower)}, {"upper", FormatExact(upper)}});
  }
  FeatureConstraint c;
  c.feature = std::move(feature);
  c.op = ConstraintOp::kRange;
  c.lower = lower;
  c.upper = upper;
  return c;
}

FeatureGroup::FeatureGroup(std::vector<FeatureConstraint> constraints) {
  for (auto& c : constraints) Add(std::move(c));
}

void FeatureGroup::Add(FeatureConstraint c) {
  for (auto& existing : items_) {
    if (existing.feature != c.feature) continue;
    auto as_interval = [](const FeatureConstraint& k, double* lo, double* hi) {
      if (k.is_categorical()) return false;
      switch (k.op) {
        case ConstraintOp::kGt:
        case ConstraintOp::kGe: *lo = k.value; return true;
        case ConstraintOp::kLt:
        case ConstraintOp::kLe: *hi = k.value; return true;
        case ConstraintOp::kRange:
          *lo = k.lower;
          *hi = k.upper;
          return true;
        default: return false;
      }
    };
    double lo1 = -INFINITY, hi1 = INFINITY, lo2 = -INFINITY, hi2 = INFINITY;
    if (as_interval(existing, &lo1, &hi1) && as_interval(c, &lo2, &hi2)) {
      double lo = std::max(lo1, lo2);
      double hi = std::min(hi1, hi2);
      if (lo < hi && std::isfinite(lo) && std::isfinite(hi)) {
        existing = FeatureConstraint::Range(existing.feature, lo, hi);
        return;
      }
    }
    existing = std::move(c);
    return;
  }
  items_.push_back(std::move(c));
}

const FeatureConstraint* FeatureGroup::Find(std::string_view feature) const {
  for (const auto& c : items_) {
    if (c.feature == feature) return &c;
  }
  return nullptr;
}

bool ParsedInterpretation::SameMeaning(const ParsedInterpretation& o) const {
  return action == o.action && target == o.target &&
         focus_features == o.focus_features && groups == o.groups;
}

namespace {

enum class Tok {
  kWord,
  kNumber,
  kString,
  kLParen,
  kRParen,
  kLBracket,
  kRBracket,
  kComma,
  kOp,
  kAnd,
  kEnd,
};

struct Token {
  Tok kind;
  std::string text;
  size_t offset;
  size_t end;
  double number = 0.0;
};

bool IsWordStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> Tokenize(std::string_view s) {
  std::vector<Token> out;
  size_t i = 0;
  auto push = [&](Tok k, size_t b, size_t e) {
    out.push_back({k, std::string(s.substr(b, e - b)), b, e});
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    size_t b = i;
    switch (c) {
      case '(': push(Tok::kLParen, b, ++i); continue;
      case ')': push(Tok::kRParen, b, ++i); continue;
      case '[': push(Tok::kLBracket, b, ++i); continue;
      case ']': push(Tok::kRBracket, b, ++i); continue;
      case '{': push(Tok::kLParen, b, ++i); continue;
      case '}': push(Tok::kRParen, b, ++i); continue;
      case ',':
      case ';': push(Tok::kComma, b, ++i); continue;
      case '&':
        while (i < s.size() && s[i] == '&') ++i;
        push(Tok::kAnd, b, i);
        continue;
      case '=':
      case ':':
        ++i;
        if (i < s.size() && s[i] == '=') ++i;
        push(Tok::kOp, b, i);
        out.back().text = "=";
        continue;
      case '<':
      case '>':
        ++i;
        if (i < s.size() && s[i] == '=') ++i;
        push(Tok::kOp, b, i);
        continue;
      case '\'':
      case '"': {
        size_t close = s.find(c, i + 1);
        if (close == std::string_view::npos) close = s.size() - 1;
        out.push_back({Tok::kString, std::string(s.substr(i + 1, close - i - 1)),
                       b, close + 1});
        i = close + 1;
        continue;
      }
      default: break;
    }
    bool sign = (c == '-' || c == '+');
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[i + 1]))) ||
        (sign && i + 1 < s.size() &&
         (std::isdigit(static_cast<unsigned char>(s[i + 1])) ||
          s[i + 1] == '.' || s.substr(i + 1, 3) == "inf"))) {
      size_t j = i + (sign ? 1 : 0);
      if (s.substr(j, 3) == "inf") {
        j += 3;
      } else {
        while (j < s.size() &&
               (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' ||
                ((s[j] == 'e' || s[j] == 'E') && j + 1 < s.size() &&
                 (std::isdigit(static_cast<unsigned char>(s[j + 1])) ||
                  s[j + 1] == '-' || s[j + 1] == '+')))) {
          if (s[j] == 'e' || s[j] == 'E') ++j;
          ++j;
        }
      }
      auto v = ParseDouble(s.substr(i, j - i));
      if (v) {
        push(Tok::kNumber, b, j);
        out.back().number = *v;
        i = j;
        continue;
      }
    }
    if (IsWordStart(c)) {
      size_t j = i + 1;
      while (j < s.size() &&
             (IsWordChar(s[j]) ||
              (s[j] == '-' && j + 1 < s.size() && IsWordStart(s[j + 1])))) {
        ++j;
      }
      std::string word(s.substr(i, j - i));
      push(ToLower(word) == "and" ? Tok::kAnd : Tok::kWord, b, j);
      i = j;
      continue;
    }
    // Unknown character: keep as a one-char word so it lands in residue.
    push(Tok::kWord, b, ++i);
  }
  out.push_back({Tok::kEnd, "", s.size(), s.size()});
  return out;
}

struct SyntaxError {
  size_t offset;
  std::string reason;
};

class Parser {
 public:
  Parser(std::string_view text, const Schema& schema)
      : text_(text), schema_(schema), toks_(Tokenize(text)) {}

  ParsedInterpretation Run() {
    CheckBalanced();
    while (Peek().kind != Tok::kEnd) {
      size_t start = pos_;
      try {
        ParseItem();
      } catch (const SyntaxError&) {
        Recover(start);
      }
      if (Peek().kind == Tok::kComma || Peek().kind == Tok::kAnd) {
        ++pos_;
        continue;
      }
      if (Peek().kind != Tok::kEnd) {
        // Unexpected token between items.
        Recover(pos_);
        if (Peek().kind == Tok::kComma || Peek().kind == Tok::kAnd ||
            Peek().kind == Tok::kRParen || Peek().kind == Tok::kRBracket) {
          ++pos_;
        }
      }
    }
    if (!action_seen_ && out_.groups.empty()) {
      throw Error(ErrorCode::kUnusableParse,
                  "interpretation has no action and no resolvable condition",
                  {{"text", std::string(text_)},
                   {"reason", "no action and no condition"},
                   {"residue", out_.residue}});
    }
    return out_;
  }

 private:
  const Token& Peek(size_t ahead = 0) const {
    size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }

  void CheckBalanced() const {
    int depth = 0;
    for (const auto& t : toks_) {
      if (t.kind == Tok::kLParen || t.kind == Tok::kLBracket) ++depth;
      if (t.kind == Tok::kRParen || t.kind == Tok::kRBracket) --depth;
      if (depth < 0) {
        throw Error(ErrorCode::kUnusableParse, "unbalanced parentheses",
                    {{"text", std::string(text_)},
                     {"reason", "unbalanced parentheses"},
                     {"position", t.offset}});
      }
    }
    if (depth != 0) {
      throw Error(ErrorCode::kUnusableParse, "unbalanced parentheses",
                  {{"text", std::string(text_)},
                   {"reason", "unbalanced parentheses"},
                   {"position", text_.size()}});
    }
  }

  // Skips to the next separator at the current nesting level and records
  // the skipped span as residue.
  void Recover(size_t start_tok) {
    pos_ = std::max(pos_, start_tok);
    int depth = 0;
    size_t scan = start_tok;
    while (true) {
      const Token& t = toks_[scan];
      if (t.kind == Tok::kEnd) break;
      if (depth == 0 && (t.kind == Tok::kComma || t.kind == Tok::kAnd) &&
          scan >= pos_) {
        break;
      }
      if (t.kind == Tok::kLParen || t.kind == Tok::kLBracket) ++depth;
      if (t.kind == Tok::kRParen || t.kind == Tok::kRBracket) {
        if (depth == 0 && scan >= pos_) break;
        --depth;
      }
      ++scan;
    }
    size_t b = toks_[start_tok].offset;
    size_t e = scan > start_tok ? toks_[scan - 1].end : b;
    std::string span = Trim(text_.substr(b, e - b));
    if (!span.empty()) out_.residue.push_back(span);
    pos_ = std::max(scan, start_tok + (scan == start_tok ? 0 : 0));
  }

  // Consecutive words joined by single spaces.
  std::optional<std::string> Phrase() {
    if (Peek().kind == Tok::kString) {
      return toks_[pos_++].text;
    }
    if (Peek().kind != Tok::kWord) return std::nullopt;
    std::string out = toks_[pos_++].text;
    while (Peek().kind == Tok::kWord) {
      out += " " + toks_[pos_++].text;
    }
    return out;
  }

  bool PhraseFollowedBy(Tok kind) const {
    size_t i = pos_;
    if (toks_[i].kind == Tok::kString) return toks_[i + 1].kind == kind;
    if (toks_[i].kind != Tok::kWord) return false;
    while (toks_[i].kind == Tok::kWord) ++i;
    return toks_[i].kind == kind;
  }

  void Expect(Tok kind, const char* what) {
    if (Peek().kind != kind) {
      throw SyntaxError{Peek().offset, std::string("expected ") + what};
    }
    ++pos_;
  }

  FeatureGroup& GroupAt(int* index) {
    if (*index < 0) {
      out_.groups.emplace_back();
      *index = static_cast<int>(out_.groups.size()) - 1;
    }
    return out_.groups[static_cast<size_t>(*index)];
  }

  void DropEmptyGroups() {
    std::vector<FeatureGroup> kept;
    for (auto& g : out_.groups) {
      if (!g.empty()) kept.push_back(std::move(g));
    }
    out_.groups = std::move(kept);
  }

  void AddFocus(const std::string& feature) {
    for (const auto& f : out_.focus_features) {
      if (f == feature) return;
    }
    out_.focus_features.push_back(feature);
  }

  void ParseItem() {
    if (Peek().kind == Tok::kLParen || Peek().kind == Tok::kLBracket) {
      standalone_ = -1;
      ParseTuple();
      return;
    }
    if (PhraseFollowedBy(Tok::kLParen)) {
      standalone_ = -1;
      ParseCall(/*top=*/true);
      return;
    }
    if (PhraseFollowedBy(Tok::kOp)) {
      ParseCond(&standalone_);
      return;
    }
    // Bare top-level word: an action without arguments, e.g. "Summarize".
    size_t start = pos_;
    auto phrase = Phrase();
    if (!phrase) throw SyntaxError{toks_[start].offset, "unexpected token"};
    if (auto f = schema_.Resolve(*phrase)) {
      AddFocus(schema_.feature(*f).name);
    } else if (schema_.IsTargetMention(*phrase) && !out_.target) {
      out_.target = *phrase;
    } else if (!action_seen_) {
      action_seen_ = true;
      out_.action = *phrase;
    } else {
      out_.residue.push_back(*phrase);
    }
  }

  void ParseTuple() {
    ++pos_;  // '(' or '['
    int group = -1;
    ParseArgs(&group, /*allow_label=*/false);
    if (Peek().kind != Tok::kRParen && Peek().kind != Tok::kRBracket) {
      throw SyntaxError{Peek().offset, "expected ')'"};
    }
    ++pos_;
    DropEmptyGroupsIfNeeded();
  }

  void DropEmptyGroupsIfNeeded() { DropEmptyGroups(); }

  void ParseCall(bool top) {
    std::string name = *Phrase();
    Expect(Tok::kLParen, "'('");
    if (auto f = schema_.Resolve(name)) {
      AddFocus(schema_.feature(*f).name);
      if (top && !action_seen_) action_seen_ = true;
    } else if (top && !action_seen_) {
      action_seen_ = true;
      out_.action = name;
    }
    int group = -1;
    ParseArgs(&group, /*allow_label=*/top);
    if (Peek().kind != Tok::kRParen && Peek().kind != Tok::kRBracket) {
      throw SyntaxError{Peek().offset, "expected ')'"};
    }
    ++pos_;
    DropEmptyGroups();
  }

  void ParseArgs(int* group, bool allow_label) {
    bool leading = true;
    while (Peek().kind != Tok::kRParen && Peek().kind != Tok::kRBracket &&
           Peek().kind != Tok::kEnd) {
      size_t start = pos_;
      try {
        if (Peek().kind == Tok::kLParen || Peek().kind == Tok::kLBracket) {
          ParseTuple();
          leading = false;
        } else if (PhraseFollowedBy(Tok::kLParen)) {
          ParseCall(/*top=*/false);
          leading = false;
        } else if (PhraseFollowedBy(Tok::kOp)) {
          ParseCond(group);
          leading = false;
        } else if (Peek().kind == Tok::kWord || Peek().kind == Tok::kString) {
          std::string phrase = *Phrase();
          if (auto f = schema_.Resolve(phrase)) {
            AddFocus(schema_.feature(*f).name);
          } else if (allow_label && leading && !out_.target) {
            out_.target = phrase;
          } else if (allow_label && schema_.IsTargetMention(phrase) &&
                     !out_.target) {
            out_.target = phrase;
          } else {
            out_.residue.push_back(phrase);
          }
        } else {
          throw SyntaxError{Peek().offset, "unexpected token"};
        }
      } catch (const SyntaxError&) {
        Recover(start);
      }
      if (Peek().kind == Tok::kComma || Peek().kind == Tok::kAnd) {
        ++pos_;
        continue;
      }
      if (Peek().kind != Tok::kRParen && Peek().kind != Tok::kRBracket &&
          Peek().kind != Tok::kEnd) {
        Recover(pos_);
        if (Peek().kind == Tok::kComma || Peek().kind == Tok::kAnd) ++pos_;
      }
    }
  }

  double ParseBound() {
    if (Peek().kind == Tok::kOp && Peek().text != "=") ++pos_;  // stray '<'
    if (Peek().kind == Tok::kNumber) return toks_[pos_++].number;
    if (Peek().kind == Tok::kWord) {
      auto v = ParseDouble(Peek().text);
      if (v && std::isinf(*v)) {
        ++pos_;
        return *v;
      }
    }
    throw SyntaxError{Peek().offset, "expected interval bound"};
  }

  void ParseCond(int* group) {
    size_t start_tok = pos_;
    std::string feature = *Phrase();
    const Token op_tok = toks_[pos_++];
    std::string op = op_tok.text;

    bool is_interval = false;
    double lower = 0, upper = 0;
    std::optional<double> number;
    std::optional<std::string> word;
    if (op == "=" &&
        (Peek().kind == Tok::kLParen || Peek().kind == Tok::kLBracket)) {
      ++pos_;
      lower = ParseBound();
      Expect(Tok::kComma, "','");
      upper = ParseBound();
      if (Peek().kind != Tok::kRParen && Peek().kind != Tok::kRBracket) {
        throw SyntaxError{Peek().offset, "expected ')'"};
      }
      ++pos_;
      is_interval = true;
    } else if (Peek().kind == Tok::kNumber) {
      number = toks_[pos_++].number;
    } else if (Peek().kind == Tok::kWord || Peek().kind == Tok::kString) {
      word = *Phrase();
    } else {
      throw SyntaxError{Peek().offset, "expected value"};
    }
    std::string span = Trim(
        text_.substr(toks_[start_tok].offset,
                     toks_[pos_ - 1].end - toks_[start_tok].offset));

    if (schema_.IsTargetMention(feature) && !schema_.Resolve(feature)) {
      if (!out_.target) out_.target = feature;
      return;
    }
    auto idx = schema_.Resolve(feature);
    if (!idx) {
      out_.residue.push_back(span);
      return;
    }
    const FeatureSpec& spec = schema_.feature(*idx);
    if (spec.is_numeric()) {
      if (is_interval) {
        if (!(lower < upper)) {
          out_.residue.push_back(span);
          return;
        }
        GroupAt(group).Add(FeatureConstraint::Range(spec.name, lower, upper));
        return;
      }
      if (!number && word) {
        number = ParseDouble(*word);
      }
      if (!number || !std::isfinite(*number)) {
        out_.residue.push_back(span);
        return;
      }
      ConstraintOp cop = ConstraintOp::kEq;
      if (op == "<") cop = ConstraintOp::kLt;
      if (op == ">") cop = ConstraintOp::kGt;
      if (op == "<=") cop = ConstraintOp::kLe;
      if (op == ">=") cop = ConstraintOp::kGe;
      GroupAt(group).Add(FeatureConstraint::Numeric(spec.name, cop, *number));
      return;
    }
    // Categorical: equality on a known category only.
    std::optional<std::string> token = word;
    if (!token && number) token = FormatExact(*number);
    if (op != "=" || !token) {
      out_.residue.push_back(span);
      return;
    }
    auto cat = schema_.ResolveCategory(*idx, *token);
    if (!cat) {
      out_.residue.push_back(span);
      return;
    }
    GroupAt(group).Add(
        FeatureConstraint::Categorical(spec.name, spec.categories[*cat].value));
  }

  std::string_view text_;
  const Schema& schema_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  int standalone_ = -1;
  bool action_seen_ = false;
  ParsedInterpretation out_;
};

}  // namespace

ParsedInterpretation ParseInterpretation(std::string_view text,
                                         const Schema& schema) {
  if (Trim(text).empty()) {
    throw Error(ErrorCode::kUnusableParse, "empty interpretation",
                {{"reason", "empty"}});
  }
  return Parser(text, schema).Run();
}

std::string SerializeConstraint(const FeatureConstraint& c) {
  if (c.is_categorical()) return c.feature + " = " + *c.category;
  if (c.op == ConstraintOp::kRange) {
    return c.feature + " = (" + FormatExact(c.lower) + ", " +
           FormatExact(c.upper) + ")";
  }
  return c.feature + " " + std::string(OpSymbol(c.op)) + " " +
         FormatExact(c.value);
}

std::string SerializeGroup(const FeatureGroup& g, std::string_view sep) {
  std::string out;
  for (const auto& c : g.constraints()) {
    if (!out.empty()) out += sep;
    out += SerializeConstraint(c);
  }
  return out;
}

std::string SerializeInterpretation(const ParsedInterpretation& p) {
  std::vector<std::string> args;
  if (p.target) args.push_back(*p.target);
  for (const auto& f : p.focus_features) args.push_back(f);
  for (size_t i = 0; i < p.groups.size(); ++i) {
    if (p.groups[i].empty()) continue;
    if (i == 0) {
      for (const auto& c : p.groups[i].constraints()) {
        args.push_back(SerializeConstraint(c));
      }
    } else {
      args.push_back("(" + SerializeGroup(p.groups[i]) + ")");
    }
  }
  std::string out = p.action.empty() ? "Explain" : p.action;
  out += "(";
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i];
  }
  out += ")";
  return out;
}

bool ConstraintSatisfied(const FeatureConstraint& c, const CellValue& value,
                         double eq_tolerance) {
  if (c.is_categorical()) {
    const auto* s = std::get_if<std::string>(&value);
    if (!s) {
      throw Error(ErrorCode::kTypeMismatch,
                  "categorical constraint on " + c.feature +
                      " compared with a number");
    }
    return AliasKey(*s) == AliasKey(*c.category);
  }
  const auto* v = std::get_if<double>(&value);
  if (!v) {
    throw Error(ErrorCode::kTypeMismatch,
                "numeric constraint on " + c.feature +
                    " compared with a category");
  }
  switch (c.op) {
    case ConstraintOp::kEq:
      return std::fabs(*v - c.value) <=
             eq_tolerance * std::max(1.0, std::fabs(c.value));
    case ConstraintOp::kLt: return *v < c.value;
    case ConstraintOp::kGt: return *v > c.value;
    case ConstraintOp::kLe: return *v <= c.value;
    case ConstraintOp::kGe: return *v >= c.value;
    case ConstraintOp::kRange: return c.lower <= *v && *v < c.upper;
  }
  return false;
}

namespace {

nlohmann::json BoundJson(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double BoundFromJson(const nlohmann::json& j) {
  if (j.is_string()) {
    auto v = ParseDouble(j.get<std::string>());
    if (!v) throw Error(ErrorCode::kParseError, "bad bound " + j.dump());
    return *v;
  }
  return j.get<double>();
}

}  // namespace

nlohmann::json ToJson(const FeatureConstraint& c) {
  nlohmann::json j = {{"feature", c.feature},
                      {"op", std::string(ConstraintOpName(c.op))}};
  if (c.is_categorical()) {
    j["category"] = *c.category;
  } else if (c.op == ConstraintOp::kRange) {
    j["lower"] = BoundJson(c.lower);
    j["upper"] = BoundJson(c.upper);
  } else {
    j["value"] = c.value;
  }
  return j;
}

nlohmann::json ToJson(const FeatureGroup& g) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : g.constraints()) arr.push_back(ToJson(c));
  return arr;
}

nlohmann::json ToJson(const ParsedInterpretation& p) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : p.groups) groups.push_back(ToJson(g));
  return {{"action", p.action},
          {"target", p.target ? nlohmann::json(*p.target) : nlohmann::json()},
          {"focus_features", p.focus_features},
          {"groups", groups},
          {"residue", p.residue},
          {"canonical", SerializeInterpretation(p)}};
}

FeatureConstraint ConstraintFromJson(const nlohmann::json& j) {
  FeatureConstraint c;
  c.feature = j.at("feature").get<std::string>();
  auto op = OpFromName(j.at("op").get<std::string>());
  if (!op) throw Error(ErrorCode::kParseError, "bad op " + j.at("op").dump());
  c.op = *op;
  if (j.contains("category")) {
    c.category = j.at("category").get<std::string>();
  } else if (c.op == ConstraintOp::kRange) {
    c.lower = BoundFromJson(j.at("lower"));
    c.upper = BoundFromJson(j.at("upper"));
  } else {
    c.value = j.at("value").get<double>();
  }
  return c;
}

FeatureGroup GroupFromJson(const nlohmann::json& j) {
  FeatureGroup g;
  for (const auto& c : j) g.Add(ConstraintFromJson(c));
  return g;
}

}  // namespace qx
