#include "codekg/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "codekg/assets.hpp"
#include "codekg/error.hpp"
#include "codekg/text.hpp"

namespace codekg {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::GIP: return "GIP";
    case Strategy::COT: return "COT";
    case Strategy::FICL: return "FICL";
    case Strategy::COT_FICL: return "COT_FICL";
  }
  return "GIP";
}

Strategy parse_strategy(std::string_view s) {
  std::string up;
  for (char c : s) up += c == '+' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (Strategy v : kAllStrategies) {
    if (to_string(v) == up) return v;
  }
  throw ConfigError("unknown prompt strategy: " + std::string(s));
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::coref: return "coref";
    case Task::classify: return "classify";
    case Task::simplify_comx: return "simplify_comx";
    case Task::simplify_comp: return "simplify_comp";
    case Task::simplify_comx_comp: return "simplify_comx_comp";
    case Task::extract: return "extract";
  }
  return "coref";
}

Task parse_task(std::string_view s) {
  for (Task t : {Task::coref, Task::classify, Task::simplify_comx, Task::simplify_comp,
                 Task::simplify_comx_comp, Task::extract}) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown prompt task: " + std::string(s));
}

std::string template_asset_path(Task task, Strategy name) {
  return "assets/prompts/" + std::string(to_string(task)) + "/" + std::string(to_string(name)) +
         ".txt";
}

PromptStrategy load_strategy(Task task, Strategy name) {
  return PromptStrategy{name, task, assets::load(template_asset_path(task, name))};
}

std::string PromptStrategy::template_hash() const { return text::sha256_hex(template_text); }

std::vector<std::string> PromptStrategy::placeholders() const {
  return codekg::placeholders(template_text);
}

namespace {

bool slot_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

struct Slot {
  std::size_t begin;
  std::size_t end;
  std::string name;
};

// Recognises a slot starting at `pos`, preferring the doubled form.
bool match_slot(std::string_view t, std::size_t pos, Slot& slot) {
  if (t[pos] != '{') return false;
  for (int braces : {2, 1}) {
    std::size_t i = pos;
    int open = 0;
    while (open < braces && i < t.size() && t[i] == '{') ++open, ++i;
    if (open != braces) continue;
    std::size_t name_begin = i;
    while (i < t.size() && slot_char(t[i])) ++i;
    if (i == name_begin) continue;
    std::size_t name_end = i;
    int close = 0;
    while (close < braces && i < t.size() && t[i] == '}') ++close, ++i;
    if (close != braces) continue;
    slot = Slot{pos, i, std::string(t.substr(name_begin, name_end - name_begin))};
    return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view tmpl) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tmpl.size();) {
    Slot s;
    if (match_slot(tmpl, i, s)) {
      if (std::find(out.begin(), out.end(), s.name) == out.end()) out.push_back(s.name);
      i = s.end;
    } else {
      ++i;
    }
  }
  return out;
}

std::string render_template(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    Slot s;
    if (match_slot(tmpl, i, s)) {
      auto it = bindings.find(s.name);
      if (it == bindings.end()) throw MissingPlaceholder(s.name);
      out += it->second;
      i = s.end;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

std::string render_prompt(const PromptStrategy& strategy, const Bindings& bindings) {
  return render_template(strategy.template_text, bindings);
}

std::map<std::string, std::string> pinned_template_checksums() {
  std::map<std::string, std::string> out;
  std::istringstream in(assets::load("assets/prompts/CHECKSUMS.sha256"));
  std::string line;
  while (std::getline(in, line)) {
    auto parts = text::split_whitespace(line);
    if (parts.size() != 2) continue;
    out["assets/prompts/" + parts[1]] = parts[0];
  }
  return out;
}

}  // namespace codekg
