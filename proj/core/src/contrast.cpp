// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The mtbias Authors

// Contrast-set construction and person-name augmentation.

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <string>

#include "mtbias/bias.hpp"
#include "mtbias/error.hpp"

namespace mtbias::bias {

namespace {

constexpr std::array<std::string_view, 10> kPronouns = {"he",  "she",  "they",  "him",  "her",
                                                        "them", "his", "their", "hers", "theirs"};

constexpr std::string_view kPronounSlot = "_";
constexpr std::string_view kNameMarker = " [name]";

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '\'' || c == '-' || c >= 0x80;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

bool is_pronoun(std::string_view token) {
  const std::string l = lower(token);
  return std::find(kPronouns.begin(), kPronouns.end(), l) != kPronouns.end();
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
    } else {
      out.emplace_back(text.substr(i, 1));
      ++i;
    }
  }
  return out;
}

std::string contrast_template(const Instance& instance) {
  const Instance base = instance.name_span ? strip_name(instance) : instance;
  std::string key;
  for (const auto& tok : tokenize(base.source_text)) {
    if (!key.empty()) key += ' ';
    key += is_pronoun(tok) ? std::string(kPronounSlot) : tok;
  }
  // Named variants form their own groups: the inserted name differs between
  // the masculine and feminine members.
  if (instance.cues.names_present) key += kNameMarker;
  return key;
}

std::vector<ContrastGroup> build_contrast_sets(std::span<const Instance> instances) {
  std::map<std::string, std::vector<const Instance*>> by_template;
  for (const auto& x : instances) by_template[contrast_template(x)].push_back(&x);

  std::vector<ContrastGroup> out;
  out.reserve(by_template.size());
  for (auto& [key, members] : by_template) {
    std::sort(members.begin(), members.end(),
              [](const Instance* a, const Instance* b) { return a->instance_id < b->instance_id; });
    std::map<CueGender, const Instance*> seen;
    ContrastGroup g;
    g.contrast_key = key;
    for (const Instance* m : members) {
      const auto [it, fresh] = seen.emplace(m->pronoun_gender, m);
      if (!fresh) {
        throw ValidationError("instances '" + it->second->instance_id + "' and '" +
                              m->instance_id + "' share pronoun gender " +
                              std::string(to_string(m->pronoun_gender)) + " and template '" + key +
                              "'");
      }
      g.member_instance_ids.push_back(m->instance_id);
    }
    out.push_back(std::move(g));
  }
  return out;
}

const NameTable& default_name_table() {
  static const NameTable table = {
      {"es", {{CueGender::F, "Carla"}, {CueGender::M, "Gabriel"}}},
      {"fr", {{CueGender::F, "Anne"}, {CueGender::M, "Victor"}}},
      {"uk", {{CueGender::F, "Anna"}, {CueGender::M, "Ivan"}}},
      {"ru", {{CueGender::F, "Anna"}, {CueGender::M, "Ivan"}}},
  };
  return table;
}

Instance augment_with_names(const Instance& instance, std::string_view language,
                            const NameTable& names) {
  if (instance.ambiguous || instance.pronoun_gender == CueGender::N) {
    throw ValidationError("augment_with_names: '" + instance.instance_id +
                          "' is ambiguous; no gendered name applies");
  }
  if (instance.name_span) {
    throw ValidationError("augment_with_names: '" + instance.instance_id + "' already has a name");
  }
  if (instance.focus_span.end > instance.source_text.size() ||
      instance.focus_span.begin >= instance.focus_span.end) {
    throw ValidationError("augment_with_names: focus span outside the source text");
  }
  const auto lang = names.find(std::string(language));
  if (lang == names.end()) {
    throw ValidationError("augment_with_names: no names for language '" + std::string(language) + "'");
  }
  const auto name = lang->second.find(instance.pronoun_gender);
  if (name == lang->second.end() || name->second.empty()) {
    throw ValidationError("augment_with_names: no " +
                          std::string(to_string(instance.pronoun_gender)) + " name for '" +
                          std::string(language) + "'");
  }

  Instance out = instance;
  const std::size_t at = instance.focus_span.end;
  out.source_text.insert(at, " " + name->second);
  out.name_span = TextSpan{at + 1, at + 1 + name->second.size()};
  out.cues.names_present = true;
  const std::string suffix = "#names-" + std::string(language);
  out.instance_id += suffix;
  if (!out.contrast_key.empty()) out.contrast_key += suffix;
  return out;
}

Instance strip_name(const Instance& instance) {
  if (!instance.name_span) return instance;
  const TextSpan span = *instance.name_span;
  if (span.begin == 0 || span.end > instance.source_text.size() || span.begin >= span.end ||
      instance.source_text[span.begin - 1] != ' ') {
    throw ValidationError("strip_name: malformed name span on '" + instance.instance_id + "'");
  }
  Instance out = instance;
  out.source_text.erase(span.begin - 1, span.end - span.begin + 1);
  out.name_span.reset();
  out.cues.names_present = false;
  // Spans after the removed name shift left.
  const std::size_t removed = span.end - span.begin + 1;
  if (out.focus_span.begin >= span.end) {
    out.focus_span.begin -= removed;
    out.focus_span.end -= removed;
  }
  return out;
}

}  // namespace mtbias::bias
