#include "codekg/pubmed.hpp"

#include <filesystem>
#include <thread>

#include <json.hpp>

#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

RateLimiter::RateLimiter(double per_second)
    : interval_(per_second > 0 ? std::chrono::nanoseconds(
                                     static_cast<long long>(1e9 / per_second))
                               : std::chrono::nanoseconds(0)),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

PubMedClient::PubMedClient(PubMedOptions options, http::Transport transport)
    : options_(std::move(options)),
      transport_(std::move(transport)),
      limiter_(options_.requests_per_second) {}

std::string PubMedClient::get(const std::string& url) {
  return with_retry(options_.retry, [&] {
    limiter_.acquire();
    ++http_calls_;
    http::Request req;
    req.url = url;
    auto resp = transport_(req);
    if (resp.status == 429) throw RateLimited("E-utilities rate limit hit (HTTP 429)");
    if (resp.status < 200 || resp.status >= 300) throw BackendError(resp.status, resp.body);
    return resp.body;
  });
}

std::string PubMedClient::cache_path(const std::string& query, int max_results,
                                     const std::optional<DateRange>& range) const {
  std::string key = query + "\n" + std::to_string(max_results);
  if (range) key += "\n" + range->from + "\n" + range->to;
  return (std::filesystem::path(options_.cache_dir) / "pubmed" / (text::sha256_hex(key) + ".json"))
      .string();
}

Corpus PubMedClient::fetch(const std::string& query, int max_results,
                           const std::optional<DateRange>& range) {
  if (max_results < 1) throw PreconditionError("max_results must be >= 1");

  const std::string path = cache_path(query, max_results, range);
  if (std::filesystem::exists(path)) {
    auto entry = json::parse(text::read_file(path));
    return parse_efetch_xml(entry.at("efetch").get<std::string>());
  }

  std::string common = "&tool=" + http::url_encode(options_.tool);
  if (!options_.email.empty()) common += "&email=" + http::url_encode(options_.email);
  if (!options_.api_key.empty()) common += "&api_key=" + http::url_encode(options_.api_key);

  std::string search_url = options_.base_url + "/esearch.fcgi?db=pubmed&retmode=json&retmax=" +
                           std::to_string(max_results) + "&term=" + http::url_encode(query);
  if (range) {
    search_url += "&datetype=pdat&mindate=" + http::url_encode(range->from) +
                  "&maxdate=" + http::url_encode(range->to);
  }
  search_url += common;
  const std::string search_body = get(search_url);
  auto ids = parse_esearch_ids(search_body);
  if (ids.empty()) throw EmptyResult(query);

  std::string fetch_url = options_.base_url + "/efetch.fcgi?db=pubmed&rettype=abstract&retmode=xml&id=" +
                          http::url_encode(text::join(ids, ",")) + common;
  const std::string fetch_body = get(fetch_url);
  Corpus corpus = parse_efetch_xml(fetch_body);
  if (corpus.empty()) throw EmptyResult(query);

  json entry = {{"query", query},
                {"max_results", max_results},
                {"esearch", search_body},
                {"efetch", fetch_body}};
  if (range) entry["date_range"] = {range->from, range->to};
  text::write_file_atomic(path, entry.dump(2));
  return corpus;
}

Corpus fetch_pubmed(const std::string& query, int max_results,
                    const std::optional<DateRange>& range, PubMedOptions options) {
  PubMedClient client(std::move(options));
  return client.fetch(query, max_results, range);
}

std::vector<std::string> parse_esearch_ids(std::string_view esearch_json) {
  json doc;
  try {
    doc = json::parse(esearch_json);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("esearch response is not JSON: ") + e.what());
  }
  std::vector<std::string> ids;
  if (!doc.contains("esearchresult")) throw SchemaError("esearch response lacks esearchresult");
  const auto& result = doc["esearchresult"];
  if (result.contains("idlist")) {
    for (const auto& id : result["idlist"]) ids.push_back(id.get<std::string>());
  }
  return ids;
}

namespace {

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out += s[i];
      continue;
    }
    std::string_view ent = s.substr(i + 1, semi - i - 1);
    unsigned long code = 0;
    bool numeric = false;
    if (ent == "amp") out += '&';
    else if (ent == "lt") out += '<';
    else if (ent == "gt") out += '>';
    else if (ent == "quot") out += '"';
    else if (ent == "apos") out += '\'';
    else if (!ent.empty() && ent[0] == '#') {
      numeric = true;
      try {
        code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                   ? std::stoul(std::string(ent.substr(2)), nullptr, 16)
                   : std::stoul(std::string(ent.substr(1)));
      } catch (...) {
        out += s.substr(i, semi - i + 1);
        i = semi;
        continue;
      }
    } else {
      out += s.substr(i, semi - i + 1);
    }
    if (numeric) {
      // UTF-8 encode.
      if (code < 0x80) {
        out += static_cast<char>(code);
      } else if (code < 0x800) {
        out += static_cast<char>(0xC0 | (code >> 6));
        out += static_cast<char>(0x80 | (code & 0x3F));
      } else if (code < 0x10000) {
        out += static_cast<char>(0xE0 | (code >> 12));
        out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (code & 0x3F));
      } else {
        out += static_cast<char>(0xF0 | (code >> 18));
        out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (code & 0x3F));
      }
    }
    i = semi;
  }
  return out;
}

std::string strip_tags(std::string_view s) {
  std::string out;
  bool in_tag = false;
  for (char c : s) {
    if (c == '<') in_tag = true;
    else if (c == '>') in_tag = false;
    else if (!in_tag) out += c;
  }
  return out;
}

// Finds the next element named `name` at or after `from`; returns false when
// none remains. `attrs` receives the raw attribute text, `inner` the content.
bool next_element(std::string_view xml, std::string_view name, std::size_t& from,
                  std::string_view& attrs, std::string_view& inner) {
  const std::string open = "<" + std::string(name);
  const std::string close = "</" + std::string(name) + ">";
  while (true) {
    auto start = xml.find(open, from);
    if (start == std::string_view::npos) return false;
    auto after = start + open.size();
    if (after >= xml.size()) return false;
    char c = xml[after];
    if (c != '>' && c != ' ' && c != '/' && c != '\t' && c != '\n') {
      from = after;  // a longer tag name sharing the prefix
      continue;
    }
    auto tag_end = xml.find('>', after);
    if (tag_end == std::string_view::npos) return false;
    attrs = xml.substr(after, tag_end - after);
    if (!attrs.empty() && attrs.back() == '/') {
      inner = {};
      from = tag_end + 1;
      return true;
    }
    auto end = xml.find(close, tag_end + 1);
    if (end == std::string_view::npos) return false;
    inner = xml.substr(tag_end + 1, end - tag_end - 1);
    from = end + close.size();
    return true;
  }
}

std::string attribute(std::string_view attrs, std::string_view key) {
  const std::string needle = std::string(key) + "=\"";
  auto p = attrs.find(needle);
  if (p == std::string_view::npos) return {};
  auto start = p + needle.size();
  auto end = attrs.find('"', start);
  if (end == std::string_view::npos) return {};
  return decode_entities(attrs.substr(start, end - start));
}

}  // namespace

Corpus parse_efetch_xml(std::string_view xml) {
  Corpus corpus;
  std::size_t pos = 0;
  std::string_view attrs, article;
  while (next_element(xml, "PubmedArticle", pos, attrs, article)) {
    std::size_t p = 0;
    std::string_view pmid_attrs, pmid;
    if (!next_element(article, "PMID", p, pmid_attrs, pmid)) continue;
    std::vector<std::string> parts;
    std::size_t q = 0;
    std::string_view abs_attrs, abs_text;
    while (next_element(article, "AbstractText", q, abs_attrs, abs_text)) {
      std::string body = text::collapse_whitespace(decode_entities(strip_tags(abs_text)));
      if (body.empty()) continue;
      std::string label = attribute(abs_attrs, "Label");
      parts.push_back(label.empty() ? body : label + ": " + body);
    }
    if (parts.empty()) continue;
    corpus.push_back(Abstract{text::collapse_whitespace(decode_entities(pmid)),
                              text::join(parts, " "), Source::pubmed});
  }
  return corpus;
}

}  // namespace codekg
