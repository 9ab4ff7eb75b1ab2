#pragma once

#include <string>
#include <string_view>

namespace seqrank {

/// Martin Porter's stemming algorithm, following his reference C implementation
/// (including its two departures from the published rules: "bli" -> "ble" and "logi" -> "log").
/// Input is expected to be a lowercase ASCII word; words of length <= 2 are returned unchanged.
class PorterStemmer {
  public:
    std::string operator()(std::string_view word) const
    {
        State s{std::string(word)};
        if (s.b.size() <= 2) {
            return s.b;
        }
        s.k = static_cast<int>(s.b.size()) - 1;
        s.step1ab();
        if (s.k > 0) {
            s.step1c();
            s.step2();
            s.step3();
            s.step4();
            s.step5();
        }
        s.b.resize(static_cast<std::size_t>(s.k) + 1);
        return s.b;
    }

  private:
    struct State {
        std::string b;
        int k = 0; // end of the current stem (inclusive)
        int j = 0; // end of the stem preceding a matched suffix

        bool cons(int i) const
        {
            switch (b[i]) {
                case 'a':
                case 'e':
                case 'i':
                case 'o':
                case 'u': return false;
                case 'y': return i == 0 ? true : !cons(i - 1);
                default: return true;
            }
        }

        /// Number of VC sequences in b[0..j].
        int m() const
        {
            int n = 0;
            int i = 0;
            while (true) {
                if (i > j) {
                    return n;
                }
                if (!cons(i)) {
                    break;
                }
                ++i;
            }
            ++i;
            while (true) {
                while (true) {
                    if (i > j) {
                        return n;
                    }
                    if (cons(i)) {
                        break;
                    }
                    ++i;
                }
                ++i;
                ++n;
                while (true) {
                    if (i > j) {
                        return n;
                    }
                    if (!cons(i)) {
                        break;
                    }
                    ++i;
                }
                ++i;
            }
        }

        bool vowel_in_stem() const
        {
            for (int i = 0; i <= j; ++i) {
                if (!cons(i)) {
                    return true;
                }
            }
            return false;
        }

        bool double_cons(int i) const
        {
            if (i < 1) {
                return false;
            }
            if (b[i] != b[i - 1]) {
                return false;
            }
            return cons(i);
        }

        bool cvc(int i) const
        {
            if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) {
                return false;
            }
            char ch = b[i];
            return ch != 'w' && ch != 'x' && ch != 'y';
        }

        bool ends(std::string_view s)
        {
            int len = static_cast<int>(s.size());
            if (s.back() != b[k]) {
                return false;
            }
            if (len > k + 1) {
                return false;
            }
            if (std::string_view(b).substr(static_cast<std::size_t>(k - len + 1), s.size()) != s) {
                return false;
            }
            j = k - len;
            return true;
        }

        void set_to(std::string_view s)
        {
            b.replace(static_cast<std::size_t>(j + 1), b.size(), s);
            k = j + static_cast<int>(s.size());
        }

        void replace_if_measured(std::string_view s)
        {
            if (m() > 0) {
                set_to(s);
            }
        }

        void step1ab()
        {
            if (b[k] == 's') {
                if (ends("sses")) {
                    k -= 2;
                } else if (ends("ies")) {
                    set_to("i");
                } else if (b[k - 1] != 's') {
                    --k;
                }
            }
            if (ends("eed")) {
                if (m() > 0) {
                    --k;
                }
            } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
                k = j;
                if (ends("at")) {
                    set_to("ate");
                } else if (ends("bl")) {
                    set_to("ble");
                } else if (ends("iz")) {
                    set_to("ize");
                } else if (double_cons(k)) {
                    --k;
                    char ch = b[k];
                    if (ch == 'l' || ch == 's' || ch == 'z') {
                        ++k;
                    }
                } else if (m() == 1 && cvc(k)) {
                    set_to("e");
                }
            }
        }

        void step1c()
        {
            if (ends("y") && vowel_in_stem()) {
                b[k] = 'i';
            }
        }

        // Tries each (suffix, replacement) in order; the first suffix that matches ends the step.
        template <std::size_t N>
        void rules(const std::pair<std::string_view, std::string_view> (&table)[N])
        {
            for (const auto& [suffix, repl] : table) {
                if (ends(suffix)) {
                    replace_if_measured(repl);
                    return;
                }
            }
        }

        void step2()
        {
            using R = std::pair<std::string_view, std::string_view>;
            switch (b[k - 1]) {
                case 'a': {
                    static constexpr R t[] = {{"ational", "ate"}, {"tional", "tion"}};
                    rules(t);
                    break;
                }
                case 'c': {
                    static constexpr R t[] = {{"enci", "ence"}, {"anci", "ance"}};
                    rules(t);
                    break;
                }
                case 'e': {
                    static constexpr R t[] = {{"izer", "ize"}};
                    rules(t);
                    break;
                }
                case 'l': {
                    static constexpr R t[] = {
                        {"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
                    rules(t);
                    break;
                }
                case 'o': {
                    static constexpr R t[] = {{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}};
                    rules(t);
                    break;
                }
                case 's': {
                    static constexpr R t[] = {
                        {"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
                    rules(t);
                    break;
                }
                case 't': {
                    static constexpr R t[] = {{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}};
                    rules(t);
                    break;
                }
                case 'g': {
                    static constexpr R t[] = {{"logi", "log"}};
                    rules(t);
                    break;
                }
                default: break;
            }
        }

        void step3()
        {
            using R = std::pair<std::string_view, std::string_view>;
            switch (b[k]) {
                case 'e': {
                    static constexpr R t[] = {{"icate", "ic"}, {"ative", ""}, {"alize", "al"}};
                    rules(t);
                    break;
                }
                case 'i': {
                    static constexpr R t[] = {{"iciti", "ic"}};
                    rules(t);
                    break;
                }
                case 'l': {
                    static constexpr R t[] = {{"ical", "ic"}, {"ful", ""}};
                    rules(t);
                    break;
                }
                case 's': {
                    static constexpr R t[] = {{"ness", ""}};
                    rules(t);
                    break;
                }
                default: break;
            }
        }

        bool ends_any(std::initializer_list<std::string_view> suffixes)
        {
            for (auto s : suffixes) {
                if (ends(s)) {
                    return true;
                }
            }
            return false;
        }

        void step4()
        {
            bool matched = false;
            switch (b[k - 1]) {
                case 'a': matched = ends("al"); break;
                case 'c': matched = ends_any({"ance", "ence"}); break;
                case 'e': matched = ends("er"); break;
                case 'i': matched = ends("ic"); break;
                case 'l': matched = ends_any({"able", "ible"}); break;
                case 'n': matched = ends_any({"ant", "ement", "ment", "ent"}); break;
                case 'o':
                    matched = (ends("ion") && j >= 0 && (b[j] == 's' || b[j] == 't')) || ends("ou");
                    break;
                case 's': matched = ends("ism"); break;
                case 't': matched = ends_any({"ate", "iti"}); break;
                case 'u': matched = ends("ous"); break;
                case 'v': matched = ends("ive"); break;
                case 'z': matched = ends("ize"); break;
                default: break;
            }
            if (matched && m() > 1) {
                k = j;
            }
        }

        void step5()
        {
            j = k;
            if (b[k] == 'e') {
                int a = m();
                if (a > 1 || (a == 1 && !cvc(k - 1))) {
                    --k;
                }
            }
            if (b[k] == 'l' && double_cons(k) && m() > 1) {
                --k;
            }
        }
    };
};

} // namespace seqrank
