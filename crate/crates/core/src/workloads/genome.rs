//! Exact multi-pattern search over a sequence store.

use aho_corasick::AhoCorasick;

use super::{ChromosomeName, HitRecord, PatternDictionary, SequenceStore, Strand};

/// Reverse complement of a forward-strand sequence (`A<->T`, `C<->G`,
/// reversed order). Only valid for `{A,C,G,T}` input.
pub fn reverse_complement(seq: &str) -> String {
    seq.chars()
        .rev()
        .map(|c| match c {
            'A' => 'T',
            'T' => 'A',
            'C' => 'G',
            'G' => 'C',
            other => panic!("not a forward-strand base: {other:?}"),
        })
        .collect()
}

/// Finds every exact occurrence of every dictionary pattern in the store.
///
/// Forward-strand hits match the pattern itself; reverse-strand hits match
/// its reverse complement and are reported on forward coordinates (1-based,
/// inclusive). Overlapping and duplicate occurrences all count, and a
/// palindromic pattern (equal to its own reverse complement) reports each
/// span on both strands. Results are sorted by
/// `(chromosome, start, pattern_id)`.
pub fn genome_search(store: &SequenceStore, dict: &PatternDictionary) -> Vec<HitRecord> {
    search_chromosomes(store.chromosomes(), dict)
}

/// [`genome_search`] restricted to one searcher's chromosome shard.
pub fn search_shard(
    store: &SequenceStore,
    shard: &[ChromosomeName],
    dict: &PatternDictionary,
) -> Vec<HitRecord> {
    let chroms = shard
        .iter()
        .filter_map(|name| store.get(*name).map(|seq| (*name, seq)));
    search_chromosomes(chroms, dict)
}

fn search_chromosomes<'a>(
    chromosomes: impl Iterator<Item = (ChromosomeName, &'a str)>,
    dict: &PatternDictionary,
) -> Vec<HitRecord> {
    if dict.is_empty() {
        return Vec::new();
    }
    // Automaton entry 2k is pattern k forward, entry 2k+1 its reverse
    // complement standing in for a reverse-strand occurrence.
    let needles: Vec<String> = dict
        .patterns()
        .iter()
        .flat_map(|p| [p.clone(), reverse_complement(p)])
        .collect();
    let ac = AhoCorasick::new(&needles).expect("validated patterns build");
    let mut hits = Vec::new();
    for (chromosome, seq) in chromosomes {
        for m in ac.find_overlapping_iter(seq) {
            let (pattern_id, strand) = decode(m.pattern().as_u32());
            hits.push(HitRecord {
                chromosome,
                start: m.start() as u64 + 1,
                end: m.end() as u64,
                strand,
                pattern_id,
            });
        }
    }
    hits.sort_unstable();
    hits
}

fn decode(automaton_id: u32) -> (u32, Strand) {
    if automaton_id % 2 == 0 {
        (automaton_id / 2, Strand::Forward)
    } else {
        (automaton_id / 2, Strand::Reverse)
    }
}

/// Merges per-searcher hit lists into one globally sorted list. Duplicates
/// are preserved: combining never drops records.
pub fn combine_hits(partials: Vec<Vec<HitRecord>>) -> Vec<HitRecord> {
    let mut all: Vec<HitRecord> = partials.into_iter().flatten().collect();
    all.sort_unstable();
    all
}

/// Assigns chromosomes round-robin to `searchers` shards. Shards can be
/// empty when there are more searchers than chromosomes; together they cover
/// the store exactly once.
pub fn shard_chromosomes(store: &SequenceStore, searchers: usize) -> Vec<Vec<ChromosomeName>> {
    assert!(searchers > 0);
    let mut shards = vec![Vec::new(); searchers];
    for (i, name) in store.names().into_iter().enumerate() {
        shards[i % searchers].push(name);
    }
    shards
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn store_of(pairs: &[(ChromosomeName, &str)]) -> SequenceStore {
        let map: BTreeMap<ChromosomeName, String> = pairs
            .iter()
            .map(|(n, s)| (*n, (*s).to_string()))
            .collect();
        SequenceStore::new(map).unwrap()
    }

    fn dict_of(patterns: &[&str]) -> PatternDictionary {
        PatternDictionary::new(patterns.iter().map(|p| (*p).to_string()).collect()).unwrap()
    }

    #[test]
    fn reverse_complement_basics() {
        assert_eq!(reverse_complement("ACGT"), "ACGT");
        assert_eq!(reverse_complement("AAC"), "GTT");
        assert_eq!(reverse_complement(""), "");
    }

    #[test]
    fn finds_forward_and_reverse_occurrences() {
        // ACGTA at 1..=5 forward; its reverse complement TACGT sits at
        // 8..=12, i.e. ACGTA occurs there on the reverse strand.
        let store = store_of(&[(ChromosomeName::ChrI, "ACGTAGGTACGTT")]);
        let hits = genome_search(&store, &dict_of(&["ACGTA"]));
        assert_eq!(
            hits,
            vec![
                HitRecord {
                    chromosome: ChromosomeName::ChrI,
                    start: 1,
                    end: 5,
                    strand: Strand::Forward,
                    pattern_id: 0,
                },
                HitRecord {
                    chromosome: ChromosomeName::ChrI,
                    start: 8,
                    end: 12,
                    strand: Strand::Reverse,
                    pattern_id: 0,
                },
            ]
        );
    }

    #[test]
    fn overlapping_occurrences_all_count() {
        let store = store_of(&[(ChromosomeName::ChrII, "AAAA")]);
        let hits = genome_search(&store, &dict_of(&["AAA"]));
        let forward: Vec<u64> = hits
            .iter()
            .filter(|h| h.strand == Strand::Forward)
            .map(|h| h.start)
            .collect();
        assert_eq!(forward, vec![1, 2]);
        // AAA's reverse complement TTT never occurs here.
        assert!(hits.iter().all(|h| h.strand == Strand::Forward));
    }

    #[test]
    fn palindromic_pattern_reports_both_strands() {
        let store = store_of(&[(ChromosomeName::ChrI, "GACGTC")]);
        let hits = genome_search(&store, &dict_of(&["ACGT"]));
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].start, hits[0].strand), (2, Strand::Forward));
        assert_eq!((hits[1].start, hits[1].strand), (2, Strand::Reverse));
    }

    #[test]
    fn hits_sort_by_chromosome_then_start_then_pattern() {
        let store = store_of(&[
            (ChromosomeName::ChrI, "TTACGTT"),
            (ChromosomeName::ChrM, "ACGACG"),
        ]);
        let hits = genome_search(&store, &dict_of(&["ACG", "CGA"]));
        let key: Vec<(ChromosomeName, u64, u32)> = hits
            .iter()
            .map(|h| (h.chromosome, h.start, h.pattern_id))
            .collect();
        let mut sorted = key.clone();
        sorted.sort_unstable();
        assert_eq!(key, sorted);
        assert_eq!(hits[0].chromosome, ChromosomeName::ChrI);
    }

    #[test]
    fn sharded_search_equals_whole_store_search() {
        let store = SequenceStore::synthesize(5, 6_000, 7);
        let dict = dict_of(&["ACGT", "TTT", "GATTACA"]);
        let whole = genome_search(&store, &dict);
        for searchers in [1, 2, 3, 7, 9] {
            let shards = shard_chromosomes(&store, searchers);
            let partials: Vec<Vec<HitRecord>> = shards
                .iter()
                .map(|shard| search_shard(&store, shard, &dict))
                .collect();
            assert_eq!(combine_hits(partials), whole, "searchers={searchers}");
        }
    }

    #[test]
    fn combine_preserves_duplicates() {
        let hit = HitRecord {
            chromosome: ChromosomeName::ChrI,
            start: 3,
            end: 5,
            strand: Strand::Forward,
            pattern_id: 1,
        };
        assert_eq!(combine_hits(vec![vec![hit], vec![hit]]).len(), 2);
    }

    #[test]
    fn empty_dictionary_yields_no_hits() {
        let store = store_of(&[(ChromosomeName::ChrI, "ACGT")]);
        assert!(genome_search(&store, &dict_of(&[])).is_empty());
    }
}
