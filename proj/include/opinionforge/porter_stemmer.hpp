#pragma once

#include <string>
#include <string_view>

namespace opinionforge {

/// Classic Porter (1980) suffix stemmer for lowercase ASCII words.
/// Words containing anything other than a-z, or of length <= 2, are returned
/// unchanged. Used as a rule-based stand-in for lemmatization.
class PorterStemmer {
 public:
  std::string operator()(std::string_view word) const {
    if (word.size() <= 2) return std::string(word);
    for (char c : word) {
      if (c < 'a' || c > 'z') return std::string(word);
    }
    State s{std::string(word), static_cast<int>(word.size()) - 1, 0};
    s.step1ab();
    if (s.k > 0) {
      s.step1c();
      s.step2();
      s.step3();
      s.step4();
      s.step5();
    }
    return s.b.substr(0, static_cast<std::size_t>(s.k) + 1);
  }

 private:
  struct State {
    std::string b;
    int k;  // end of the current word
    int j;  // end of the stem while a suffix is being tested

    bool cons(int i) const {
      switch (b[static_cast<std::size_t>(i)]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
          return false;
        case 'y':
          return i == 0 ? true : !cons(i - 1);
        default:
          return true;
      }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
      int n = 0;
      int i = 0;
      for (;;) {
        if (i > j) return n;
        if (!cons(i)) break;
        ++i;
      }
      ++i;
      for (;;) {
        for (;;) {
          if (i > j) return n;
          if (cons(i)) break;
          ++i;
        }
        ++i;
        ++n;
        for (;;) {
          if (i > j) return n;
          if (!cons(i)) break;
          ++i;
        }
        ++i;
      }
    }

    bool vowel_in_stem() const {
      for (int i = 0; i <= j; ++i) {
        if (!cons(i)) return true;
      }
      return false;
    }

    bool double_consonant(int i) const {
      if (i < 1) return false;
      if (b[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i) - 1]) return false;
      return cons(i);
    }

    // consonant-vowel-consonant ending at i, last consonant not w, x or y.
    bool cvc(int i) const {
      if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
      char ch = b[static_cast<std::size_t>(i)];
      return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view suffix) {
      int len = static_cast<int>(suffix.size());
      if (len > k + 1) return false;
      if (std::string_view(b).substr(static_cast<std::size_t>(k - len + 1),
                                     static_cast<std::size_t>(len)) != suffix) {
        return false;
      }
      j = k - len;
      return true;
    }

    void set_to(std::string_view replacement) {
      b.replace(static_cast<std::size_t>(j) + 1, static_cast<std::size_t>(k - j),
                replacement);
      k = j + static_cast<int>(replacement.size());
    }

    void replace_if_measured(std::string_view replacement) {
      if (m() > 0) set_to(replacement);
    }

    char at(int i) const { return b[static_cast<std::size_t>(i)]; }

    void step1ab() {
      if (at(k) == 's') {
        if (ends("sses")) {
          k -= 2;
        } else if (ends("ies")) {
          set_to("i");
        } else if (at(k - 1) != 's') {
          --k;
        }
      }
      if (ends("eed")) {
        if (m() > 0) --k;
      } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
        k = j;
        if (ends("at")) {
          set_to("ate");
        } else if (ends("bl")) {
          set_to("ble");
        } else if (ends("iz")) {
          set_to("ize");
        } else if (double_consonant(k)) {
          --k;
          char ch = at(k);
          if (ch == 'l' || ch == 's' || ch == 'z') ++k;
        } else if (j = k, m() == 1 && cvc(k)) {
          set_to("e");
        }
      }
    }

    void step1c() {
      if (ends("y") && vowel_in_stem()) b[static_cast<std::size_t>(k)] = 'i';
    }

    void step2() {
      if (k < 1) return;
      switch (at(k - 1)) {
        case 'a':
          if (ends("ational")) { replace_if_measured("ate"); break; }
          if (ends("tional")) { replace_if_measured("tion"); break; }
          break;
        case 'c':
          if (ends("enci")) { replace_if_measured("ence"); break; }
          if (ends("anci")) { replace_if_measured("ance"); break; }
          break;
        case 'e':
          if (ends("izer")) { replace_if_measured("ize"); break; }
          break;
        case 'l':
          if (ends("bli")) { replace_if_measured("ble"); break; }
          if (ends("alli")) { replace_if_measured("al"); break; }
          if (ends("entli")) { replace_if_measured("ent"); break; }
          if (ends("eli")) { replace_if_measured("e"); break; }
          if (ends("ousli")) { replace_if_measured("ous"); break; }
          break;
        case 'o':
          if (ends("ization")) { replace_if_measured("ize"); break; }
          if (ends("ation")) { replace_if_measured("ate"); break; }
          if (ends("ator")) { replace_if_measured("ate"); break; }
          break;
        case 's':
          if (ends("alism")) { replace_if_measured("al"); break; }
          if (ends("iveness")) { replace_if_measured("ive"); break; }
          if (ends("fulness")) { replace_if_measured("ful"); break; }
          if (ends("ousness")) { replace_if_measured("ous"); break; }
          break;
        case 't':
          if (ends("aliti")) { replace_if_measured("al"); break; }
          if (ends("iviti")) { replace_if_measured("ive"); break; }
          if (ends("biliti")) { replace_if_measured("ble"); break; }
          break;
        case 'g':
          if (ends("logi")) { replace_if_measured("log"); break; }
          break;
        default:
          break;
      }
    }

    void step3() {
      switch (at(k)) {
        case 'e':
          if (ends("icate")) { replace_if_measured("ic"); break; }
          if (ends("ative")) { replace_if_measured(""); break; }
          if (ends("alize")) { replace_if_measured("al"); break; }
          break;
        case 'i':
          if (ends("iciti")) { replace_if_measured("ic"); break; }
          break;
        case 'l':
          if (ends("ical")) { replace_if_measured("ic"); break; }
          if (ends("ful")) { replace_if_measured(""); break; }
          break;
        case 's':
          if (ends("ness")) { replace_if_measured(""); break; }
          break;
        default:
          break;
      }
    }

    void step4() {
      if (k < 1) return;
      switch (at(k - 1)) {
        case 'a':
          if (ends("al")) break;
          return;
        case 'c':
          if (ends("ance")) break;
          if (ends("ence")) break;
          return;
        case 'e':
          if (ends("er")) break;
          return;
        case 'i':
          if (ends("ic")) break;
          return;
        case 'l':
          if (ends("able")) break;
          if (ends("ible")) break;
          return;
        case 'n':
          if (ends("ant")) break;
          if (ends("ement")) break;
          if (ends("ment")) break;
          if (ends("ent")) break;
          return;
        case 'o':
          if (ends("ion") && j >= 0 && (at(j) == 's' || at(j) == 't')) break;
          if (ends("ou")) break;
          return;
        case 's':
          if (ends("ism")) break;
          return;
        case 't':
          if (ends("ate")) break;
          if (ends("iti")) break;
          return;
        case 'u':
          if (ends("ous")) break;
          return;
        case 'v':
          if (ends("ive")) break;
          return;
        case 'z':
          if (ends("ize")) break;
          return;
        default:
          return;
      }
      if (m() > 1) k = j;
    }

    void step5() {
      j = k;
      if (at(k) == 'e') {
        int a = m();
        if (a > 1 || (a == 1 && !cvc(k - 1))) --k;
      }
      if (at(k) == 'l' && double_consonant(k) && m() > 1) --k;
    }
  };
};

inline std::string porter_stem(std::string_view word) { return PorterStemmer{}(word); }

}  // namespace opinionforge
