#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "factuality/corpus/sentence.hpp"

namespace factuality::corpus {

// Reads 10-column CoNLL-U. Multiword-token ranges ("1-2") and empty nodes
// ("1.1") are skipped; sentence ids come from "# sent_id = ..." comments and
// fall back to "sent-<n>". Every sentence is validated; errors carry the
// line number.
std::vector<Sentence> parse_conllu(std::istream& in);
std::vector<Sentence> read_conllu(const std::filesystem::path& path);

// Writes ID, FORM, LEMMA, UPOS, HEAD and DEPREL; the remaining columns are "_".
void write_conllu(std::ostream& out, const std::vector<Sentence>& sentences);

}  // namespace factuality::corpus
