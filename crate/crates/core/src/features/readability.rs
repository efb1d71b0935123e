//! Flesch reading ease and the vowel-run syllable counter behind it.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("text contains no words")]
pub struct EmptyText;

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Counts syllables as maximal vowel runs (y included), minus one for a
/// silent terminal "e". Never returns less than 1.
pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).flat_map(char::to_lowercase).collect();
    if letters.is_empty() {
        return 1;
    }
    let mut runs = 0;
    let mut in_run = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !in_run {
            runs += 1;
        }
        in_run = v;
    }
    let n = letters.len();
    let ends_in_e = letters[n - 1] == 'e';
    let consonant_le = n >= 3 && letters[n - 2] == 'l' && !is_vowel(letters[n - 3]);
    if ends_in_e && runs > 1 && !consonant_le {
        runs -= 1;
    }
    runs.max(1)
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Word count, sentence count and syllable count of a text.
pub fn text_counts(text: &str) -> (usize, usize, usize) {
    let words: Vec<&str> = text.split_whitespace().filter(|w| w.chars().any(char::is_alphabetic)).collect();
    let syllables = words.iter().map(|w| count_syllables(w)).sum();

    // a sentence is a stretch containing a word that ends in a run of terminators
    let mut sentences = 0;
    let mut has_word = false;
    let mut prev_terminator = false;
    for c in text.chars() {
        if is_terminator(c) {
            if has_word && !prev_terminator {
                sentences += 1;
                has_word = false;
            }
            prev_terminator = true;
        } else {
            if c.is_alphabetic() {
                has_word = true;
            }
            prev_terminator = false;
        }
    }
    (words.len(), sentences.max(1), syllables)
}

/// 206.835 - 1.015 (words / sentences) - 84.6 (syllables / words).
pub fn flesch_reading_ease<T: Scalar>(text: &str) -> Result<T, EmptyText> {
    let (words, sentences, syllables) = text_counts(text);
    if words == 0 {
        return Err(EmptyText);
    }
    Ok(flesch_from_counts(words, sentences, syllables))
}

pub fn flesch_from_counts<T: Scalar>(words: usize, sentences: usize, syllables: usize) -> T {
    let w = T::from_usize(words).unwrap();
    let s = T::from_usize(sentences).unwrap();
    let y = T::from_usize(syllables).unwrap();
    T::lit(206.835) - T::lit(1.015) * (w / s) - T::lit(84.6) * (y / w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn syllable_table() {
        for (word, n) in [("cat", 1), ("make", 1), ("table", 2), ("rhythm", 1), ("Extraordinary", 5), ("", 1), ("42", 1), ("the", 1)] {
            assert_eq!(count_syllables(word), n, "{word}");
        }
    }

    #[test]
    fn hand_computed_scores() {
        let a: f64 = flesch_reading_ease("Cat naps now").unwrap();
        assert!((a - 119.19).abs() < 1e-9, "{a}");
        let b: f64 = flesch_reading_ease("Extraordinary").unwrap();
        assert!((b - -217.18).abs() < 1e-9, "{b}");
        assert_eq!(flesch_reading_ease::<f64>(""), Err(EmptyText));
        assert_eq!(flesch_reading_ease::<f64>("  42 !! "), Err(EmptyText));
    }

    #[test]
    fn f32_agrees_with_f64() {
        let a: f32 = flesch_reading_ease("Cat naps now").unwrap();
        assert!((a - 119.19).abs() < 1e-3);
    }

    #[test]
    fn sentence_segments() {
        assert_eq!(text_counts("Cat naps now").1, 1);
        assert_eq!(text_counts("Hi there. Bye now!").1, 2);
        assert_eq!(text_counts("Wait... what?!").1, 2);
        assert_eq!(text_counts("Hi. there").1, 1);
    }

    proptest! {
        #[test]
        fn strictly_decreasing_in_syllables(words in 1usize..30, sentences in 1usize..5, syl in 1usize..100) {
            let lo: f64 = flesch_from_counts(words, sentences, syl);
            let hi: f64 = flesch_from_counts(words, sentences, syl + 1);
            prop_assert!(hi < lo);
        }
    }
}
