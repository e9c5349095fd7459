//! Porter suffix-stripping stemmer.
//!
//! Implements the classic five-step algorithm over lowercase ASCII words so
//! bag-of-words vocabularies are reproducible without external tooling.
//! Words of one or two letters pass through unchanged.

/// Stems one lowercase alphabetic token.
pub(crate) fn stem(word: &str) -> String {
    let mut w: Vec<u8> = word.bytes().collect();
    if w.len() <= 2 {
        return word.to_string();
    }
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w).expect("stemmer operates on ascii")
}

/// A letter is a consonant unless it is a plain vowel, or a `y` that
/// follows a consonant.
fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-to-consonant transitions (the "measure" m).
fn measure(w: &[u8]) -> usize {
    let n = w.len();
    let mut i = 0;
    while i < n && is_cons(w, i) {
        i += 1;
    }
    let mut m = 0;
    loop {
        while i < n && !is_cons(w, i) {
            i += 1;
        }
        if i == n {
            return m;
        }
        m += 1;
        while i < n && is_cons(w, i) {
            i += 1;
        }
        if i == n {
            return m;
        }
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// Ends consonant-vowel-consonant where the final consonant is not w, x
/// or y (the `*o` condition).
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends(w: &[u8], suffix: &[u8]) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix
}

/// Plural removal: sses -> ss, ies -> i, ss -> ss, s -> (drop).
fn step1a(w: &mut Vec<u8>) {
    if ends(w, b"sses") || ends(w, b"ies") {
        w.truncate(w.len() - 2);
    } else if !ends(w, b"ss") && ends(w, b"s") {
        w.pop();
    }
}

/// Past-tense and gerund removal with restoration of a trailing e where the
/// bare stem would be misleading (conflat -> conflate, hop stays hop).
fn step1b(w: &mut Vec<u8>) {
    if ends(w, b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.pop();
        }
        return;
    }
    let cut = if ends(w, b"ed") && has_vowel(&w[..w.len() - 2]) {
        2
    } else if ends(w, b"ing") && has_vowel(&w[..w.len() - 3]) {
        3
    } else {
        return;
    };
    w.truncate(w.len() - cut);
    if ends(w, b"at") || ends(w, b"bl") || ends(w, b"iz") {
        w.push(b'e');
    } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

/// y -> i when the stem contains a vowel (happy -> happi, sky -> sky).
fn step1c(w: &mut Vec<u8>) {
    if ends(w, b"y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// Rewrites the first (longest-listed) matching suffix when the remaining
/// stem has measure above `min_m`. Only one suffix is considered per word:
/// a match with a failing condition still ends the step.
fn rewrite(w: &mut Vec<u8>, table: &[(&[u8], &[u8])], min_m: usize) {
    for (suffix, replacement) in table {
        if ends(w, suffix) {
            let stem_len = w.len() - suffix.len();
            if measure(&w[..stem_len]) > min_m {
                w.truncate(stem_len);
                w.extend_from_slice(replacement);
            }
            return;
        }
    }
}

fn step2(w: &mut Vec<u8>) {
    const TABLE: &[(&[u8], &[u8])] = &[
        (b"ational", b"ate"),
        (b"tional", b"tion"),
        (b"enci", b"ence"),
        (b"anci", b"ance"),
        (b"izer", b"ize"),
        (b"abli", b"able"),
        (b"alli", b"al"),
        (b"entli", b"ent"),
        (b"eli", b"e"),
        (b"ousli", b"ous"),
        (b"ization", b"ize"),
        (b"ation", b"ate"),
        (b"ator", b"ate"),
        (b"alism", b"al"),
        (b"iveness", b"ive"),
        (b"fulness", b"ful"),
        (b"ousness", b"ous"),
        (b"aliti", b"al"),
        (b"iviti", b"ive"),
        (b"biliti", b"ble"),
        (b"logi", b"log"),
    ];
    rewrite(w, TABLE, 0);
}

fn step3(w: &mut Vec<u8>) {
    const TABLE: &[(&[u8], &[u8])] = &[
        (b"icate", b"ic"),
        (b"ative", b""),
        (b"alize", b"al"),
        (b"iciti", b"ic"),
        (b"ical", b"ic"),
        (b"ful", b""),
        (b"ness", b""),
    ];
    rewrite(w, TABLE, 0);
}

fn step4(w: &mut Vec<u8>) {
    // Longest suffixes first so e.g. "ement" wins over "ment" and "ent".
    const SUFFIXES: &[&[u8]] = &[
        b"ement", b"ance", b"ence", b"able", b"ible", b"ment", b"ant", b"ent", b"ion", b"ism",
        b"ate", b"iti", b"ous", b"ive", b"ize", b"al", b"er", b"ic", b"ou",
    ];
    for suffix in SUFFIXES {
        if ends(w, suffix) {
            let stem_len = w.len() - suffix.len();
            let mut ok = measure(&w[..stem_len]) > 1;
            if *suffix == b"ion" {
                ok = ok && stem_len >= 1 && matches!(w[stem_len - 1], b's' | b't');
            }
            if ok {
                w.truncate(stem_len);
            }
            return;
        }
    }
}

/// Final-e removal and ll -> l reduction.
fn step5(w: &mut Vec<u8>) {
    if ends(w, b"e") {
        let m = measure(&w[..w.len() - 1]);
        if m > 1 || (m == 1 && !ends_cvc(&w[..w.len() - 1])) {
            w.pop();
        }
    }
    let n = w.len();
    if n >= 2 && w[n - 1] == b'l' && w[n - 2] == b'l' && measure(w) > 1 {
        w.pop();
    }
}
