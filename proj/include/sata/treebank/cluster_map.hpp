#pragma once

// Coarse tag clustering: 12 word-level groups (universal POS tagset) and 11
// phrase-level groups, 23 categories in total. Word groups take ids 0..11 and
// phrase groups 12..22.

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sata/core/error.hpp"

namespace sata::treebank {

enum class TagPosition { word, phrase };

inline constexpr std::size_t kWordGroups = 12;
inline constexpr std::size_t kPhraseGroups = 11;
inline constexpr std::size_t kTagCategories = kWordGroups + kPhraseGroups;

inline constexpr std::array<std::string_view, kWordGroups> kWordGroupNames = {
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "CONJ", "PRT", "PUNCT", "X"};
inline constexpr std::array<std::string_view, kPhraseGroups> kPhraseGroupNames = {
    "CLAUSE", "NP", "VP", "ADJP", "ADVP", "PP", "QP", "PRN", "CONJP", "FRAG", "OTHER"};

// Shipped table; data/cluster_map.tsv holds the same text.
inline constexpr std::string_view kDefaultClusterMap = R"([word]
!	PUNCT
#	PUNCT
$	PUNCT
''	PUNCT
(	PUNCT
)	PUNCT
,	PUNCT
-LRB-	PUNCT
-RRB-	PUNCT
-LCB-	PUNCT
-RCB-	PUNCT
-LSB-	PUNCT
-RSB-	PUNCT
.	PUNCT
:	PUNCT
?	PUNCT
``	PUNCT
HYPH	PUNCT
NFP	PUNCT
CC	CONJ
CD	NUM
DT	DET
EX	DET
PDT	DET
WDT	DET
FW	X
LS	X
SYM	X
UH	X
-NONE-	X
ADD	X
GW	X
XX	X
IN	ADP
JJ	ADJ
JJR	ADJ
JJS	ADJ
AFX	ADJ
MD	VERB
VB	VERB
VBD	VERB
VBG	VERB
VBN	VERB
VBP	VERB
VBZ	VERB
NN	NOUN
NNS	NOUN
NNP	NOUN
NNPS	NOUN
POS	PRT
RP	PRT
TO	PRT
PRP	PRON
PRP$	PRON
WP	PRON
WP$	PRON
RB	ADV
RBR	ADV
RBS	ADV
WRB	ADV
[phrase]
ROOT	CLAUSE
S	CLAUSE
SINV	CLAUSE
SQ	CLAUSE
SBAR	CLAUSE
SBARQ	CLAUSE
NP	NP
NX	NP
NAC	NP
WHNP	NP
VP	VP
ADJP	ADJP
WHADJP	ADJP
ADVP	ADVP
WHADVP	ADVP
PP	PP
WHPP	PP
QP	QP
PRT	PRN
PRN	PRN
INTJ	PRN
CONJP	CONJP
UCP	CONJP
FRAG	FRAG
X	FRAG
LST	FRAG
RRC	FRAG
)";

// Removes the binarization suffix and PTB function tags / indices:
// "NP-SBJ-1" -> "NP", "NP@" -> "NP", "PP=2" -> "PP". Tags that begin with '-'
// ("-LRB-", "-NONE-") are kept whole.
inline std::string base_tag(std::string_view raw) {
  while (!raw.empty() && raw.back() == '@') raw.remove_suffix(1);
  if (raw.empty() || raw.front() == '-') return std::string(raw);
  const std::size_t cut = raw.find_first_of("-=");
  return std::string(raw.substr(0, cut));
}

class ClusterMap {
 public:
  ClusterMap() = default;

  static ClusterMap default_map() { return parse(kDefaultClusterMap); }

  // Lines "RAWTAG<TAB>GROUP" under "[word]" and "[phrase]" headers. Blank
  // lines and lines starting with "# " are skipped.
  static ClusterMap parse(std::string_view text) {
    ClusterMap map;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    int section = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.rfind("# ", 0) == 0) continue;
      if (line == "[word]") {
        section = 0;
        continue;
      }
      if (line == "[phrase]") {
        section = 1;
        continue;
      }
      if (section < 0) throw FormatError("entry before a [word] or [phrase] header", line_no);
      const std::size_t tab = line.find('\t');
      if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
        throw FormatError("expected RAWTAG<TAB>GROUP", line_no);
      }
      const std::string raw = line.substr(0, tab);
      const std::string group = line.substr(tab + 1);
      if (section == 0) {
        map.word_[raw] = group_index(kWordGroupNames, group, line_no);
      } else {
        map.phrase_[raw] = kWordGroups + group_index(kPhraseGroupNames, group, line_no);
      }
    }
    return map;
  }

  static ClusterMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cluster map " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  // Total: unknown word tags fall into X, unknown phrase tags into OTHER.
  std::size_t cluster(std::string_view raw, TagPosition position) const {
    const auto& table = position == TagPosition::word ? word_ : phrase_;
    const std::string key(raw);
    if (auto it = table.find(key); it != table.end()) return it->second;
    if (auto it = table.find(base_tag(raw)); it != table.end()) return it->second;
    return position == TagPosition::word ? word_fallback() : phrase_fallback();
  }

  static constexpr std::size_t word_fallback() { return kWordGroups - 1; }
  static constexpr std::size_t phrase_fallback() { return kTagCategories - 1; }

  // Serialises back to the file format, sorted by tag within each section.
  std::string to_text() const {
    std::string out = "[word]\n";
    append_sorted(out, word_, 0);
    out += "[phrase]\n";
    append_sorted(out, phrase_, kWordGroups);
    return out;
  }

  std::size_t word_entries() const noexcept { return word_.size(); }
  std::size_t phrase_entries() const noexcept { return phrase_.size(); }

  friend bool operator==(const ClusterMap&, const ClusterMap&) = default;

 private:
  template <std::size_t N>
  static std::size_t group_index(const std::array<std::string_view, N>& names, const std::string& group,
                                 std::size_t line_no) {
    for (std::size_t i = 0; i < N; ++i)
      if (names[i] == group) return i;
    throw FormatError("unknown group '" + group + "'", line_no);
  }

  static void append_sorted(std::string& out, const std::unordered_map<std::string, std::size_t>& table,
                            std::size_t offset) {
    std::vector<std::pair<std::string, std::size_t>> entries(table.begin(), table.end());
    std::sort(entries.begin(), entries.end());
    for (const auto& [tag, id] : entries) {
      out += tag;
      out += '\t';
      out += offset == 0 ? kWordGroupNames[id] : kPhraseGroupNames[id - offset];
      out += '\n';
    }
  }

  std::unordered_map<std::string, std::size_t> word_;
  std::unordered_map<std::string, std::size_t> phrase_;
};

inline std::size_t cluster_tag(std::string_view raw, TagPosition position, const ClusterMap& map) {
  return map.cluster(raw, position);
}

}  // namespace sata::treebank
