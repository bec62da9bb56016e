#include "layout_agent/prompt.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "layout_agent/hash.hpp"

namespace layout_agent {

// Generated from prompts/ at configure time.
namespace embedded {
extern const std::vector<std::pair<std::string_view, std::string_view>> kPromptFiles;
extern const std::string_view kPromptVersion;
}  // namespace embedded

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::instruction: return "instruction";
    case Channel::history: return "history";
    case Channel::status_text: return "status_text";
    case Channel::status_image: return "status_image";
  }
  return "unknown";
}

std::string PromptBundle::hash() const {
  Sha256 h;
  h.field("system").field(system_text);
  for (const auto& part : user_parts) {
    h.field(to_string(part.channel));
    if (part.is_image()) {
      h.field("image").field(part.view).field(part.image_hash);
    } else {
      h.field("text").field(part.text);
    }
  }
  return h.hex_digest();
}

std::vector<const PromptPart*> PromptBundle::parts(Channel channel) const {
  std::vector<const PromptPart*> out;
  for (const auto& p : user_parts) {
    if (p.channel == channel) out.push_back(&p);
  }
  return out;
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates instance = [] {
    PromptTemplates t;
    for (const auto& [name, text] : embedded::kPromptFiles) {
      t.templates_.emplace(std::string(name), std::string(text));
    }
    t.version_ = std::string(embedded::kPromptVersion);
    return t;
  }();
  return instance;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    t.templates_.emplace(entry.path().stem().string(), ss.str());
  }
  t.version_ = dir.filename().string();
  return t;
}

const std::string& PromptTemplates::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw std::invalid_argument("prompt template '" + std::string(name) + "' not found");
  }
  return it->second;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      return out;
    }
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw std::invalid_argument("template: unterminated placeholder");
    }
    out.append(tmpl.substr(pos, open - pos));
    std::string name(tmpl.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end()) throw std::invalid_argument("template: unknown placeholder '" + name + "'");
    out += it->second;
    pos = close + 2;
  }
}

namespace {

// Template files end with a newline; fragments are spliced inline.
std::string chomp(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

std::string common_prompt(const AgentConfig& config, const PromptTemplates& templates) {
  const bool relative = config.position_mode == PositionMode::relative;
  return render_template(
      templates.get("common"),
      {{"move_cursor", chomp(templates.get(relative ? "move_relative" : "move_absolute"))},
       {"output_format", chomp(templates.get(config.cot ? "format_cot" : "format_plain"))}});
}

std::string render_history(const Transcript& history) {
  std::string out;
  for (const auto& step : history.steps) {
    if (step.action) {
      out += action_to_json(*step.action) + "\n";
      if (step.outcome && step.outcome->status == StepStatus::rejected) {
        out += "REJECTED: " + step.outcome->detail + "\n";
      }
    } else if (step.error) {
      out += "INVALID OUTPUT: " + step.error->message + "\n";
    }
  }
  return out;
}

PromptBundle build_prompt(const AgentConfig& config, std::string_view instruction,
                          const Transcript& history, const Scene& scene,
                          const std::optional<RenderedViews>& views,
                          const PromptTemplates& templates) {
  if (views.has_value() != config.include_status_image) {
    throw std::invalid_argument("build_prompt: views must be supplied iff include_status_image");
  }
  PromptBundle bundle;
  bundle.system_text = common_prompt(config, templates);

  bundle.user_parts.push_back(
      {Channel::instruction, "User instruction:\n" + std::string(instruction) + "\n", {}, {}, {}});

  if (config.include_history) {
    std::string rendered = render_history(history);
    if (rendered.empty()) rendered = std::string(kEmptyHistoryMarker) + "\n";
    bundle.user_parts.push_back(
        {Channel::history, "Action history (oldest first):\n" + rendered, {}, {}, {}});
  }

  if (config.status_text_mode != StatusTextMode::off) {
    bundle.user_parts.push_back(
        {Channel::status_text,
         "Space state (bounding boxes; x, y are the center):\n" +
             bbox_text(scene, config.status_text_mode == StatusTextMode::cursor_only),
         {},
         {},
         {}});
  }

  if (views) {
    auto add_image = [&](const Image& img, ViewKind kind) {
      auto shared = std::make_shared<const Image>(img);
      bundle.user_parts.push_back(
          {Channel::status_image, "", shared, shared->content_hash(), std::string(to_string(kind))});
    };
    add_image(views->overview, ViewKind::oblique_overview);
    add_image(views->topdown, ViewKind::topdown_at_cursor);
  }
  return bundle;
}

}  // namespace layout_agent
