#include "mathkg/corpus.hpp"

#include <fstream>
#include <istream>
#include <unordered_set>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

using nlohmann::json;

namespace {

std::string get_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

std::vector<std::string> get_list(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_array()) throw Error(std::string("field '") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw Error(std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }
bool is_fullwidth_terminator(char32_t c) { return c == 0x3002 || c == 0xFF01 || c == 0xFF1F; }

}  // namespace

Document parse_document(std::string_view json_line) {
  json obj;
  try {
    obj = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw Error("document must be a JSON object");

  Document doc;
  doc.id = get_string(obj, "id");
  if (doc.id.empty()) throw Error("document id must be non-empty");
  doc.title = get_string(obj, "title");
  doc.categories = get_list(obj, "categories");
  doc.abstract = get_string(obj, "abstract");
  doc.body = get_string(obj, "body");
  doc.links = get_list(obj, "links");
  doc.formulas = get_list(obj, "formulas");
  if (auto it = obj.find("infobox"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) throw Error("field 'infobox' must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw Error("infobox value for '" + k + "' must be a string");
      doc.infobox.emplace(k, v.get<std::string>());
    }
  }
  return doc;
}

std::string document_to_json(const Document& doc) {
  nlohmann::ordered_json obj;
  obj["id"] = doc.id;
  obj["title"] = doc.title;
  obj["categories"] = doc.categories;
  obj["abstract"] = doc.abstract;
  obj["body"] = doc.body;
  obj["infobox"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : doc.infobox) obj["infobox"][k] = v;
  obj["links"] = doc.links;
  obj["formulas"] = doc.formulas;
  return obj.dump();
}

std::vector<Document> read_documents(std::istream& in, const std::string& source) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    Document doc;
    try {
      doc = parse_document(line);
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
    if (!seen.insert(doc.id).second) {
      throw Error(source + ":" + std::to_string(lineno) + ": duplicate document id '" + doc.id + "'");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> ingest_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_documents(in, path.string());
}

void write_documents(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& d : docs) out << document_to_json(d) << '\n';
}

std::vector<std::string> split_sentences(std::string_view input) {
  const auto cps = text::decode_utf8(input);
  std::vector<std::string> out;
  auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && text::is_whitespace(cps[begin])) ++begin;
    while (end > begin && text::is_whitespace(cps[end - 1])) --end;
    if (begin < end) out.push_back(text::encode_utf8(std::u32string_view(cps).substr(begin, end - begin)));
  };
  std::size_t begin = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const bool at_end = i + 1 == cps.size();
    if ((is_terminator(cps[i]) && (at_end || text::is_whitespace(cps[i + 1]))) ||
        is_fullwidth_terminator(cps[i])) {
      emit(begin, i + 1);
      begin = i + 1;
    }
  }
  emit(begin, cps.size());
  return out;
}

std::vector<Token> tokenize(std::string_view sentence) {
  const auto cps = text::decode_utf8(sentence);
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    if (text::is_whitespace(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (text::is_latin_alnum(c)) {
      while (j < cps.size() && text::is_latin_alnum(cps[j])) ++j;
    }
    tokens.push_back({text::encode_utf8(std::u32string_view(cps).substr(i, j - i)), i, j});
    i = j;
  }
  return tokens;
}

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

std::string token_key(std::string_view surface) {
  std::string out;
  for (const auto& t : tokenize(surface)) {
    if (!out.empty()) out.push_back(' ');
    out += text::to_lower(t.surface);
  }
  return out;
}

std::vector<Sentence> make_sentences(const Document& doc) {
  std::vector<Sentence> out;
  for (const std::string* field : {&doc.abstract, &doc.body}) {
    for (auto& s : split_sentences(*field)) {
      Sentence sent;
      sent.doc_id = doc.id;
      sent.index = out.size();
      sent.tokens = tokenize(s);
      sent.text = std::move(s);
      out.push_back(std::move(sent));
    }
  }
  return out;
}

std::vector<std::string> separators(const Sentence& s) {
  const auto cps = text::decode_utf8(s.text);
  std::vector<std::string> out;
  std::size_t prev = 0;
  for (const auto& t : s.tokens) {
    out.push_back(text::encode_utf8(std::u32string_view(cps).substr(prev, t.start - prev)));
    prev = t.end;
  }
  out.push_back(text::encode_utf8(std::u32string_view(cps).substr(std::min(prev, cps.size()))));
  return out;
}

std::string reconstruct(const Sentence& s) {
  const auto seps = separators(s);
  std::string out = seps.front();
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    out += s.tokens[i].surface;
    out += seps[i + 1];
  }
  return out;
}

}  // namespace mathkg
