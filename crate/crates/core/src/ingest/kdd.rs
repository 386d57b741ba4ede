use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FrequencyMatrix, MatrixMode, SyscallVocabulary};
use crate::Real;

/// The 41 connection features, in record order.
pub const KDD_FEATURE_NAMES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// Columns holding symbolic values (protocol, service, flag).
const SYMBOLIC_COLUMNS: [usize; 3] = [1, 2, 3];

const FIELDS_PER_ROW: usize = 42;

/// Broad feature family of each record column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Intrinsic,
    Content,
    Traffic,
}

/// Per-column kinds: 9 intrinsic, 13 content, 19 traffic.
pub fn feature_kinds() -> [FeatureKind; 41] {
    let mut kinds = [FeatureKind::Traffic; 41];
    for k in kinds.iter_mut().take(9) {
        *k = FeatureKind::Intrinsic;
    }
    for k in kinds.iter_mut().take(22).skip(9) {
        *k = FeatureKind::Content;
    }
    kinds
}

/// A parsed connection-record set: 41 numeric features per row, one class
/// label per row, and the coding tables used for symbolic columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecordSet<T> {
    pub features: Array2<T>,
    pub labels: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    /// Feature name → symbolic values in first-appearance (= code) order.
    pub symbolic_codings: BTreeMap<String, Vec<String>>,
}

impl<T: Real> LabeledRecordSet<T> {
    pub fn n_records(&self) -> usize {
        self.features.nrows()
    }

    pub fn distinct_labels(&self) -> Vec<String> {
        let mut labels = self.labels.clone();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Repackages the records as a frequency matrix so the rest of the
    /// pipeline can run on them. Columns are the feature names in
    /// lexicographic order; `binary` or `normalized` mode (rates are
    /// fractional, so `count` fails validation).
    pub fn to_matrix(&self, mode: MatrixMode) -> Result<FrequencyMatrix<T>> {
        let vocab = SyscallVocabulary::from_tokens(KDD_FEATURE_NAMES);
        let n = self.n_records();
        let mut values = Array2::<T>::zeros((n, 41));
        for (j_sorted, name) in vocab.tokens().iter().enumerate() {
            let j_orig = KDD_FEATURE_NAMES
                .iter()
                .position(|n| n == name)
                .expect("vocab is built from the name table");
            for i in 0..n {
                values[[i, j_sorted]] = self.features[[i, j_orig]];
            }
        }
        match mode {
            MatrixMode::Count => {}
            MatrixMode::Binary => {
                values.mapv_inplace(|v| if v > T::zero() { T::one() } else { T::zero() });
            }
            MatrixMode::Normalized => {
                for mut row in values.rows_mut() {
                    let sum = row.iter().copied().sum::<T>();
                    if sum > T::zero() {
                        row.mapv_inplace(|v| v / sum);
                    }
                }
            }
        }
        let rows = (0..n).map(|i| format!("r{i:06}")).collect();
        let labels = self.labels.iter().cloned().map(Some).collect();
        FrequencyMatrix::new(rows, vocab, mode, values, labels)
    }
}

fn strip_trailing_dot(s: &str) -> &str {
    s.strip_suffix('.').unwrap_or(s)
}

/// Parses 42-field comma-separated connection records.
///
/// Symbolic columns are integer-coded by order of first appearance; the
/// label field is stripped of a trailing period and mapped through
/// `category_map` (rows with unmapped labels are rejected).
pub fn parse_kdd_csv<T: Real, R: BufRead>(
    reader: R,
    category_map: &BTreeMap<String, String>,
) -> Result<LabeledRecordSet<T>> {
    let normalized_map: HashMap<String, &String> = category_map
        .iter()
        .map(|(k, v)| (strip_trailing_dot(k).to_string(), v))
        .collect();

    let mut data: Vec<T> = Vec::new();
    let mut labels = Vec::new();
    let mut codes: HashMap<usize, HashMap<String, usize>> = HashMap::new();
    let mut code_order: BTreeMap<String, Vec<String>> = BTreeMap::new();

    let mut rows = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let row_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != FIELDS_PER_ROW {
            return Err(Error::parse(
                row_no,
                format!("expected 42 fields, found {}", fields.len()),
            ));
        }
        for (j, field) in fields[..41].iter().enumerate() {
            let value = if SYMBOLIC_COLUMNS.contains(&j) {
                let table = codes.entry(j).or_default();
                let next = table.len();
                let code = *table.entry(field.to_string()).or_insert(next);
                if code == next {
                    code_order
                        .entry(KDD_FEATURE_NAMES[j].to_string())
                        .or_default()
                        .push(field.to_string());
                }
                T::from_usize(code).unwrap()
            } else {
                let parsed: f64 = field.parse().map_err(|_| {
                    Error::parse(
                        row_no,
                        format!("field {} (\"{}\"): not a number", j + 1, field),
                    )
                })?;
                T::from_f64(parsed).unwrap()
            };
            data.push(value);
        }
        let raw_label = strip_trailing_dot(fields[41]);
        let label = normalized_map.get(raw_label).ok_or_else(|| {
            Error::validation(format!(
                "row {row_no}: label \"{raw_label}\" is not in the category map"
            ))
        })?;
        labels.push((*label).clone());
        rows += 1;
    }

    let features = Array2::from_shape_vec((rows, 41), data)
        .expect("row-major buffer matches the collected shape");
    Ok(LabeledRecordSet {
        features,
        labels,
        feature_kinds: feature_kinds().to_vec(),
        symbolic_codings: code_order,
    })
}

/// Parses an attack-name → class table: one `<attack> <class>` pair per
/// line, `#` comments ignored, trailing periods on names tolerated.
pub fn parse_category_map<R: BufRead>(reader: R) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                line_no,
                format!("expected \"<attack> <class>\", found {} fields", fields.len()),
            ));
        }
        map.insert(
            strip_trailing_dot(fields[0]).to_string(),
            fields[1].to_string(),
        );
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kdd_row(protocol: &str, service: &str, flag: &str, label: &str) -> String {
        // duration, proto, service, flag, then 37 numeric fields, then label
        let mut fields = vec!["0".to_string()];
        fields.push(protocol.to_string());
        fields.push(service.to_string());
        fields.push(flag.to_string());
        for i in 0..37 {
            fields.push(format!("{}", (i % 5) as f64 * 0.25));
        }
        fields.push(label.to_string());
        fields.join(",")
    }

    fn identity_map(labels: &[&str]) -> BTreeMap<String, String> {
        labels
            .iter()
            .map(|l| (l.to_string(), strip_trailing_dot(l).to_string()))
            .collect()
    }

    #[test]
    fn parses_single_row_and_strips_trailing_dot() {
        let row = kdd_row("tcp", "http", "SF", "normal.");
        let set = parse_kdd_csv::<f64, _>(row.as_bytes(), &identity_map(&["normal."])).unwrap();
        assert_eq!(set.n_records(), 1);
        assert_eq!(set.labels, ["normal"]);
        assert_eq!(set.features.ncols(), 41);
    }

    #[test]
    fn wrong_field_count_is_parse_error() {
        let short = vec!["0"; 40].join(",");
        let err = parse_kdd_csv::<f64, _>(short.as_bytes(), &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("expected 42 fields"), "{err}");
    }

    #[test]
    fn unmapped_label_is_listed() {
        let row = kdd_row("tcp", "http", "SF", "teardrop.");
        let err = parse_kdd_csv::<f64, _>(row.as_bytes(), &identity_map(&["normal."])).unwrap_err();
        assert!(err.to_string().contains("teardrop"), "{err}");
    }

    #[test]
    fn category_grouping_over_fixture() {
        let text = [
            kdd_row("tcp", "http", "SF", "normal."),
            kdd_row("icmp", "ecr_i", "SF", "smurf."),
            kdd_row("tcp", "private", "REJ", "ipsweep."),
            kdd_row("icmp", "ecr_i", "SF", "smurf."),
        ]
        .join("\n");
        let map: BTreeMap<String, String> = [
            ("smurf".to_string(), "dos".to_string()),
            ("ipsweep".to_string(), "probe".to_string()),
            ("normal".to_string(), "normal".to_string()),
        ]
        .into();
        let set = parse_kdd_csv::<f64, _>(text.as_bytes(), &map).unwrap();
        assert_eq!(set.distinct_labels(), ["dos", "normal", "probe"]);
    }

    #[test]
    fn symbolic_columns_coded_by_first_appearance() {
        let text = [
            kdd_row("tcp", "http", "SF", "normal."),
            kdd_row("udp", "domain", "SF", "normal."),
            kdd_row("tcp", "http", "REJ", "normal."),
        ]
        .join("\n");
        let set = parse_kdd_csv::<f64, _>(text.as_bytes(), &identity_map(&["normal."])).unwrap();
        assert_eq!(set.features[[0, 1]], 0.0); // tcp
        assert_eq!(set.features[[1, 1]], 1.0); // udp
        assert_eq!(set.features[[2, 1]], 0.0); // tcp again
        assert_eq!(
            set.symbolic_codings.get("protocol_type").unwrap(),
            &vec!["tcp".to_string(), "udp".to_string()]
        );
        assert_eq!(
            set.symbolic_codings.get("flag").unwrap(),
            &vec!["SF".to_string(), "REJ".to_string()]
        );
    }

    #[test]
    fn kind_tagging_is_9_13_19() {
        let kinds = feature_kinds();
        let count = |k: FeatureKind| kinds.iter().filter(|&&x| x == k).count();
        assert_eq!(count(FeatureKind::Intrinsic), 9);
        assert_eq!(count(FeatureKind::Content), 13);
        assert_eq!(count(FeatureKind::Traffic), 19);
    }

    #[test]
    fn to_matrix_normalized_and_binary_work_count_fails() {
        let text = [
            kdd_row("tcp", "http", "SF", "normal."),
            kdd_row("udp", "domain", "REJ", "normal."),
        ]
        .join("\n");
        let set = parse_kdd_csv::<f64, _>(text.as_bytes(), &identity_map(&["normal."])).unwrap();
        let m = set.to_matrix(MatrixMode::Normalized).unwrap();
        assert_eq!(m.n_features(), 41);
        m.validate().unwrap();
        set.to_matrix(MatrixMode::Binary).unwrap().validate().unwrap();
        assert!(set.to_matrix(MatrixMode::Count).is_err());
    }

    #[test]
    fn category_map_file_parses() {
        let text = "# grouping\nsmurf. dos\nipsweep probe\n\nnormal normal\n";
        let map = parse_category_map(text.as_bytes()).unwrap();
        assert_eq!(map.get("smurf").map(String::as_str), Some("dos"));
        assert_eq!(map.len(), 3);
        assert!(parse_category_map("one_field\n".as_bytes()).is_err());
    }
}
