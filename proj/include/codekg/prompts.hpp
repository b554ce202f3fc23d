#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace codekg {

enum class Strategy { GIP, COT, FICL, COT_FICL };

inline constexpr Strategy kAllStrategies[] = {Strategy::GIP, Strategy::COT, Strategy::FICL,
                                              Strategy::COT_FICL};

std::string_view to_string(Strategy s);
// Accepts "COT_FICL", "COT+FICL" and any letter case. Throws ConfigError.
Strategy parse_strategy(std::string_view s);

// Which stage a template belongs to. Simplification has one template set per
// sentence category.
enum class Task { coref, classify, simplify_comx, simplify_comp, simplify_comx_comp, extract };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

using Bindings = std::map<std::string, std::string, std::less<>>;

struct PromptStrategy {
  Strategy name = Strategy::COT_FICL;
  Task task = Task::coref;
  std::string template_text;

  std::string label() const { return std::string(to_string(name)); }
  std::string template_hash() const;
  std::vector<std::string> placeholders() const;
};

// Loads assets/prompts/<task>/<strategy>.txt.
PromptStrategy load_strategy(Task task, Strategy name);
std::string template_asset_path(Task task, Strategy name);

// Slots are {name} or {{name}} with name made of [a-z_]. Anything else, such
// as literal JSON braces, is left alone.
std::vector<std::string> placeholders(std::string_view tmpl);

// Single-pass substitution: bound values are never rescanned. Extra bindings
// are ignored. Throws MissingPlaceholder for the first unbound slot.
std::string render_template(std::string_view tmpl, const Bindings& bindings);
std::string render_prompt(const PromptStrategy& strategy, const Bindings& bindings);

// Parsed assets/prompts/CHECKSUMS.sha256: relative template path -> sha256.
std::map<std::string, std::string> pinned_template_checksums();

}  // namespace codekg
