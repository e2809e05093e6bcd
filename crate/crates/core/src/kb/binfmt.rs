//! Binary index file.
//!
//! All integers are little-endian. Every table has fixed-width rows, so a
//! reader can binary-search titles directly over a memory-mapped file.
//!
//! ```text
//! header      magic "ENTCSIDX", u32 version, u32 lang_count,
//!             u64 title_count, u64 record_count, u64 label_count,
//!             u64 offsets of: lang table, title table, record table,
//!                             label table, string heap; u64 file length
//! lang table  lang_count   x (u64 str_off, u32 str_len, u32 0)
//! title table title_count  x (u64 str_off, u32 str_len, u32 record_index)   sorted by title bytes
//! record tbl  record_count x (u64 qid, u64 first_label, u32 label_count, u32 0, 4 x u64 lang mask)   sorted by qid
//! label table label_count  x (u64 str_off, u32 str_len, u16 lang, u16 0)
//! string heap UTF-8 bytes
//! ```

use std::io::Write;

use super::{EntityIndex, EntityRecord, IndexError, LangSet, Languages, Qid};

pub const MAGIC: &[u8; 8] = b"ENTCSIDX";
pub const FORMAT_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 4 + 8 * 3 + 8 * 6;
const LANG_ROW: usize = 16;
const TITLE_ROW: usize = 16;
const RECORD_ROW: usize = 24 + 32;
const LABEL_ROW: usize = 16;

impl EntityIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut heap = Vec::new();
        let mut push_str = |s: &str| {
            let off = heap.len() as u64;
            heap.extend_from_slice(s.as_bytes());
            (off, s.len() as u32)
        };

        let mut langs = Vec::with_capacity(self.languages.len() * LANG_ROW);
        for code in self.languages.codes() {
            let (off, len) = push_str(code);
            put_u64(&mut langs, off);
            put_u32(&mut langs, len);
            put_u32(&mut langs, 0);
        }

        let titles_sorted = {
            let mut t: Vec<(&str, u32)> = self.titles.iter().map(|(k, &v)| (&**k, v)).collect();
            t.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));
            t
        };
        let mut titles = Vec::with_capacity(titles_sorted.len() * TITLE_ROW);
        for (title, rec) in &titles_sorted {
            let (off, len) = push_str(title);
            put_u64(&mut titles, off);
            put_u32(&mut titles, len);
            put_u32(&mut titles, *rec);
        }

        let mut records = Vec::with_capacity(self.records.len() * RECORD_ROW);
        let mut labels = Vec::new();
        let mut label_count = 0u64;
        for rec in &self.records {
            put_u64(&mut records, rec.qid.0);
            put_u64(&mut records, label_count);
            put_u32(&mut records, rec.labels.len() as u32);
            put_u32(&mut records, 0);
            for w in rec.languages.words() {
                put_u64(&mut records, w);
            }
            for (lang, label) in &rec.labels {
                let (off, len) = push_str(label);
                put_u64(&mut labels, off);
                put_u32(&mut labels, len);
                labels.extend_from_slice(&lang.to_le_bytes());
                labels.extend_from_slice(&0u16.to_le_bytes());
                label_count += 1;
            }
        }

        let lang_off = HEADER_LEN;
        let title_off = lang_off + langs.len();
        let record_off = title_off + titles.len();
        let label_off = record_off + records.len();
        let heap_off = label_off + labels.len();
        let total = heap_off + heap.len();

        let mut out = Vec::with_capacity(total);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION);
        put_u32(&mut out, self.languages.len() as u32);
        put_u64(&mut out, titles_sorted.len() as u64);
        put_u64(&mut out, self.records.len() as u64);
        put_u64(&mut out, label_count);
        for off in [lang_off, title_off, record_off, label_off, heap_off, total] {
            put_u64(&mut out, off as u64);
        }
        debug_assert_eq!(out.len(), HEADER_LEN);
        out.extend_from_slice(&langs);
        out.extend_from_slice(&titles);
        out.extend_from_slice(&records);
        out.extend_from_slice(&labels);
        out.extend_from_slice(&heap);
        out
    }

    pub fn write_binary(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let r = Reader { bytes };
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(IndexError::Format("missing magic header".into()));
        }
        let version = r.u32(8)?;
        if version != FORMAT_VERSION {
            return Err(IndexError::UnsupportedVersion(version));
        }
        let lang_count = r.u32(12)? as usize;
        let title_count = r.len(16)?;
        let record_count = r.len(24)?;
        let label_count = r.len(32)?;
        let lang_off = r.len(40)?;
        let title_off = r.len(48)?;
        let record_off = r.len(56)?;
        let label_off = r.len(64)?;
        let heap_off = r.len(72)?;
        let total = r.len(80)?;
        if total != bytes.len() {
            return Err(IndexError::Format(format!(
                "length {} but header says {total}",
                bytes.len()
            )));
        }
        let sections = [
            (lang_off, lang_count, LANG_ROW, title_off),
            (title_off, title_count, TITLE_ROW, record_off),
            (record_off, record_count, RECORD_ROW, label_off),
            (label_off, label_count, LABEL_ROW, heap_off),
        ];
        for (start, count, row, next) in sections {
            if count.checked_mul(row).and_then(|n| n.checked_add(start)) != Some(next) {
                return Err(IndexError::Format("section table sizes do not match offsets".into()));
            }
        }
        let heap = Reader {
            bytes: &bytes[heap_off..],
        };

        let codes = (0..lang_count)
            .map(|i| {
                let row = lang_off + i * LANG_ROW;
                heap.str(r.len(row)?, r.u32(row + 8)? as usize)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let languages = Languages::new(&codes)?;
        if languages.codes() != codes.as_slice() {
            return Err(IndexError::Format("language table is not sorted and unique".into()));
        }

        let mut records = Vec::with_capacity(record_count);
        for i in 0..record_count {
            let row = record_off + i * RECORD_ROW;
            let qid = Qid(r.u64(row)?);
            let first = r.len(row + 8)?;
            let count = r.u32(row + 16)? as usize;
            let mut words = [0u64; 4];
            for (k, w) in words.iter_mut().enumerate() {
                *w = r.u64(row + 24 + 8 * k)?;
            }
            if first.checked_add(count).is_none_or(|end| end > label_count) {
                return Err(IndexError::Format(format!("record {qid} label range out of bounds")));
            }
            let mut labels = Vec::with_capacity(count);
            for j in first..first + count {
                let lrow = label_off + j * LABEL_ROW;
                let text = heap.str(r.len(lrow)?, r.u32(lrow + 8)? as usize)?;
                let lang = u16::from_le_bytes([bytes[lrow + 12], bytes[lrow + 13]]);
                if lang as usize >= lang_count || labels.last().is_some_and(|(l, _)| *l >= lang) {
                    return Err(IndexError::Format(format!("record {qid} has bad label language")));
                }
                labels.push((lang, text.into_boxed_str()));
            }
            let languages: LangSet = labels.iter().map(|(l, _)| *l).collect();
            if languages.words() != words {
                return Err(IndexError::Format(format!("record {qid} language mask mismatch")));
            }
            if records.last().is_some_and(|p: &EntityRecord| p.qid >= qid) {
                return Err(IndexError::Format("records are not sorted by qid".into()));
            }
            records.push(EntityRecord { qid, languages, labels });
        }

        let mut titles = std::collections::HashMap::with_capacity(title_count);
        for i in 0..title_count {
            let row = title_off + i * TITLE_ROW;
            let title = heap.str(r.len(row)?, r.u32(row + 8)? as usize)?;
            let rec = r.u32(row + 12)?;
            if rec as usize >= records.len() {
                return Err(IndexError::Format(format!(
                    "title {title:?} points past the record table"
                )));
            }
            if titles.insert(title.into_boxed_str(), rec).is_some() {
                return Err(IndexError::Format("duplicate title".into()));
            }
        }

        Ok(EntityIndex {
            languages,
            titles,
            records,
        })
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn take<const N: usize>(&self, at: usize) -> Result<[u8; N], IndexError> {
        at.checked_add(N)
            .and_then(|end| self.bytes.get(at..end))
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| IndexError::Format(format!("read past end at offset {at}")))
    }

    fn u32(&self, at: usize) -> Result<u32, IndexError> {
        self.take::<4>(at).map(u32::from_le_bytes)
    }

    fn u64(&self, at: usize) -> Result<u64, IndexError> {
        self.take::<8>(at).map(u64::from_le_bytes)
    }

    fn len(&self, at: usize) -> Result<usize, IndexError> {
        usize::try_from(self.u64(at)?).map_err(|_| IndexError::Format("offset overflows usize".into()))
    }

    fn str(&self, off: usize, len: usize) -> Result<String, IndexError> {
        let slice = off
            .checked_add(len)
            .and_then(|end| self.bytes.get(off..end))
            .ok_or_else(|| IndexError::Format("string out of heap bounds".into()))?;
        std::str::from_utf8(slice)
            .map(str::to_owned)
            .map_err(|_| IndexError::Format("string is not UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::super::build_index;
    use super::*;

    fn sample() -> EntityIndex {
        build_index(
            [("Paris", "Q90"), ("Zürich", "Q72"), ("Nowhere", "Q9")],
            [("Q90", "fr", "Paris"), ("Q90", "el", "Παρίσι"), ("Q72", "de", "Zürich")],
            Languages::new(["fr", "de", "el"]).unwrap(),
        )
        .0
    }

    #[test]
    fn round_trip() {
        let idx = sample();
        let bytes = idx.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(EntityIndex::from_bytes(&bytes).unwrap(), idx);
        // Serializing is deterministic despite hash-map iteration order.
        assert_eq!(EntityIndex::from_bytes(&bytes).unwrap().to_bytes(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().to_bytes();
        assert!(EntityIndex::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert!(matches!(
            EntityIndex::from_bytes(&wrong_version),
            Err(IndexError::UnsupportedVersion(9))
        ));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(EntityIndex::from_bytes(&bad_magic).is_err());
        for i in HEADER_LEN..bytes.len() {
            let mut flipped = bytes.clone();
            flipped[i] ^= 0xFF;
            // Must never panic; content flips inside the heap may still parse.
            let _ = EntityIndex::from_bytes(&flipped);
        }
    }
}
