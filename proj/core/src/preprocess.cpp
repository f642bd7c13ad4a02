#include <cctype>
#include <string>

#include "kupred/embed.hpp"

namespace kupred::embed {

namespace {

bool is_token_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_';
}

// Lowercase ASCII letter or pass-through.
char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

void flush_token(std::string& tok, TokenSeq& out) {
  // Dots/underscores survive only inside identifiers.
  std::size_t begin = 0, end = tok.size();
  while (begin < end && (tok[begin] == '.' || tok[begin] == '_')) ++begin;
  while (end > begin && (tok[end - 1] == '.' || tok[end - 1] == '_')) --end;
  if (end > begin) out.push_back(tok.substr(begin, end - begin));
  tok.clear();
}

std::string tag_name(std::string_view tag_body) {
  std::string name;
  std::size_t i = 0;
  if (i < tag_body.size() && tag_body[i] == '/') ++i;
  while (i < tag_body.size() &&
         std::isalnum(static_cast<unsigned char>(tag_body[i])))
    name.push_back(lower(tag_body[i++]));
  return name;
}

void decode_entities(std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    std::size_t semi = text.find(';', i);
    if (semi == std::string::npos || semi - i > 10) {
      out.push_back(text[i++]);
      continue;
    }
    std::string_view ent(text.data() + i + 1, semi - i - 1);
    if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "amp") out.push_back('&');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else if (ent == "nbsp") out.push_back(' ');
    else if (!ent.empty() && ent[0] == '#') {
      long code = 0;
      try {
        code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                   ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                   : std::stol(std::string(ent.substr(1)));
      } catch (...) {
        code = 0;
      }
      out.push_back(code > 0 && code < 128 ? static_cast<char>(code) : ' ');
    } else {
      out.push_back(' ');
    }
    i = semi + 1;
  }
  text = std::move(out);
}

}  // namespace

TokenSeq preprocess(std::string_view raw, std::size_t code_keep_threshold) {
  // First pass: strip tags, apply the short-code-snippet rule. Tag
  // handling is best effort; unbalanced markup never throws.
  std::string text;
  text.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != '<') {
      text.push_back(raw[i++]);
      continue;
    }
    std::size_t close = raw.find('>', i);
    if (close == std::string_view::npos) {
      // Dangling '<': treat the rest as text.
      text.append(raw.substr(i));
      break;
    }
    std::string_view body = raw.substr(i + 1, close - i - 1);
    if (tag_name(body) == "code" && !body.starts_with('/')) {
      std::size_t code_end = raw.find("</code", close + 1);
      if (code_end != std::string_view::npos) {
        std::string_view snippet = raw.substr(close + 1, code_end - close - 1);
        if (snippet.size() < code_keep_threshold) {
          text.append(snippet);
          text.push_back(' ');
        }
        std::size_t tag_close = raw.find('>', code_end);
        i = tag_close == std::string_view::npos ? raw.size() : tag_close + 1;
        continue;
      }
    }
    text.push_back(' ');
    i = close + 1;
  }

  decode_entities(text);

  TokenSeq tokens;
  std::string tok;
  for (char c : text) {
    if (is_token_char(c)) {
      tok.push_back(lower(c));
    } else {
      flush_token(tok, tokens);
    }
  }
  flush_token(tok, tokens);
  return tokens;
}

}  // namespace kupred::embed
