#include "factuality/corpus/conllu.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>

#include "factuality/errors.hpp"

namespace factuality::corpus {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_index(std::string_view text, std::size_t& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

struct Pending {
  Sentence sentence;
  std::vector<std::size_t> raw_heads;  // 1-based, 0 = root
  std::size_t first_line = 0;
};

}  // namespace

std::vector<Sentence> parse_conllu(std::istream& in) {
  std::vector<Sentence> out;
  Pending pending;
  std::string line;
  std::size_t line_no = 0;

  auto flush = [&](std::size_t end_line) {
    if (pending.sentence.tokens.empty()) {
      pending = Pending{};
      return;
    }
    Sentence& s = pending.sentence;
    if (s.id.empty()) s.id = "sent-" + std::to_string(out.size() + 1);
    const std::size_t n = s.tokens.size();
    s.heads.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t h = pending.raw_heads[t];
      if (h > n) {
        throw DataError("sentence '" + s.id + "': head " + std::to_string(h) + " of token " +
                            std::to_string(t + 1) + " is out of range",
                        end_line);
      }
      s.heads[t] = h == 0 ? Sentence::kRoot : h - 1;
    }
    try {
      s.validate();
    } catch (const DataError& e) {
      throw DataError(e.what(), end_line);
    }
    out.push_back(std::move(s));
    pending = Pending{};
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush(line_no);
      continue;
    }
    if (line[0] == '#') {
      constexpr std::string_view kSentId = "# sent_id";
      if (line.rfind(kSentId, 0) == 0) {
        std::string_view rest = std::string_view(line).substr(kSentId.size());
        const std::size_t eq = rest.find('=');
        if (eq != std::string_view::npos) rest = rest.substr(eq + 1);
        while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        while (!rest.empty() && rest.back() == ' ') rest.remove_suffix(1);
        pending.sentence.id = std::string(rest);
      }
      continue;
    }

    const auto fields = split_tabs(line);
    if (fields.size() != 10) {
      throw DataError("expected 10 tab-separated columns, found " + std::to_string(fields.size()),
                      line_no);
    }
    const std::string_view id = fields[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) {
      continue;
    }
    std::size_t index = 0;
    if (!parse_index(id, index)) throw DataError("non-integer token id '" + std::string(id) + "'", line_no);
    if (pending.sentence.tokens.empty()) pending.first_line = line_no;
    if (index != pending.sentence.tokens.size() + 1) {
      throw DataError("token id " + std::string(id) + " is out of sequence", line_no);
    }
    std::size_t head = 0;
    if (!parse_index(fields[6], head)) {
      throw DataError("non-integer head '" + std::string(fields[6]) + "'", line_no);
    }
    Sentence& s = pending.sentence;
    s.tokens.emplace_back(fields[1]);
    s.lemmas.emplace_back(fields[2]);
    s.upos.emplace_back(fields[3]);
    s.deprels.emplace_back(fields[7]);
    pending.raw_heads.push_back(head);
  }
  flush(line_no);
  return out;
}

std::vector<Sentence> read_conllu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open treebank " + path.string());
  return parse_conllu(in);
}

void write_conllu(std::ostream& out, const std::vector<Sentence>& sentences) {
  for (const Sentence& s : sentences) {
    out << "# sent_id = " << s.id << '\n';
    for (std::size_t t = 0; t < s.size(); ++t) {
      const std::size_t head = s.heads[t] == Sentence::kRoot ? 0 : s.heads[t] + 1;
      out << t + 1 << '\t' << s.tokens[t] << '\t' << s.lemmas[t] << '\t' << s.upos[t]
          << "\t_\t_\t" << head << '\t' << s.deprels[t] << "\t_\t_\n";
    }
    out << '\n';
  }
}

}  // namespace factuality::corpus
