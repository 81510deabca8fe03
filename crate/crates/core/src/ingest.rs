//! Dataset loaders: MovieLens 100K and generic relation tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::hin::{Hin, HinBuilder, LinkGroup};

pub const ML100K_GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// Likes threshold used for both bundled dataset layouts.
pub const LIKES_THRESHOLD: i32 = 3;

fn read_latin1(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(bytes.iter().map(|&b| b as char).collect())
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

struct Movie {
    title: String,
    year: String,
    genres: Vec<usize>,
}

fn parse_items(path: &Path, genre_count: usize) -> Result<Vec<(String, Movie)>> {
    let text = read_latin1(path)?;
    let mut movies = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 5 + genre_count {
            return Err(parse_err(
                path,
                n + 1,
                format!(
                    "expected {} fields, found {}",
                    5 + genre_count,
                    fields.len()
                ),
            ));
        }
        let year = fields[2]
            .rsplit('-')
            .next()
            .map(str::trim)
            .filter(|y| !y.is_empty())
            .unwrap_or("unknown")
            .to_string();
        let mut genres = Vec::new();
        for (g, flag) in fields[5..].iter().enumerate() {
            match flag.trim() {
                "1" => genres.push(g),
                "0" => {}
                other => return Err(parse_err(path, n + 1, format!("bad genre flag `{other}`"))),
            }
        }
        movies.push((
            fields[0].trim().to_string(),
            Movie {
                title: fields[1].to_string(),
                year,
                genres,
            },
        ));
    }
    Ok(movies)
}

fn parse_genres(path: &Path) -> Result<Vec<String>> {
    let text = read_latin1(path)?;
    let mut named: Vec<(usize, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (name, idx) = line
            .rsplit_once('|')
            .ok_or_else(|| parse_err(path, n + 1, "expected `name|index`"))?;
        let idx = idx
            .trim()
            .parse()
            .map_err(|_| parse_err(path, n + 1, format!("bad genre index `{idx}`")))?;
        named.push((idx, name.to_string()));
    }
    named.sort();
    Ok(named.into_iter().map(|(_, n)| n).collect())
}

/// Parses a MovieLens 100K directory (`u.data`, `u.item`, `u.user`, and
/// `u.genre` when present).
///
/// Movies are identified by title: ids sharing a title are merged, the
/// first id in `u.item` order supplying release year and genres, and a
/// user's repeated rating of a merged movie keeps the first rating in
/// `u.data` order. Movies nobody rated are dropped. Ratings are kept as
/// edge payload on `R_rates`.
pub fn parse_movielens_100k(dir: &Path) -> Result<Hin> {
    let data_path = dir.join("u.data");
    let item_path = dir.join("u.item");
    let user_path = dir.join("u.user");
    for p in [&data_path, &item_path, &user_path] {
        if !p.exists() {
            return Err(Error::MissingFile(p.clone()));
        }
    }
    let genre_path = dir.join("u.genre");
    let genres: Vec<String> = if genre_path.exists() {
        parse_genres(&genre_path)?
    } else {
        ML100K_GENRES.iter().map(|s| s.to_string()).collect()
    };

    let items = parse_items(&item_path, genres.len())?;
    let mut title_of = std::collections::HashMap::new();
    let mut canonical: indexmap::IndexMap<String, &Movie> = indexmap::IndexMap::new();
    for (id, movie) in &items {
        title_of.insert(id.as_str(), movie.title.as_str());
        canonical.entry(movie.title.clone()).or_insert(movie);
    }

    let mut b = HinBuilder::new();
    b.relation("R_rates", "user", "movie")?;
    b.relation("R_Ty", "movie", "type")?;
    b.relation("R_Ye", "movie", "release")?;
    b.relation("R_Oc", "user", "occupation")?;
    b.relation("R_Ag", "user", "age")?;
    b.relation("R_Ge", "user", "gender")?;
    b.relation("R_Lo", "user", "location")?;

    let users_text = read_latin1(&user_path)?;
    let mut users = Vec::new();
    for (n, line) in users_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('|').collect();
        if f.len() != 5 {
            return Err(parse_err(
                &user_path,
                n + 1,
                format!("expected 5 fields, found {}", f.len()),
            ));
        }
        users.push([
            f[0].trim(),
            f[1].trim(),
            f[2].trim(),
            f[3].trim(),
            f[4].trim(),
        ]);
    }

    let data_text = read_latin1(&data_path)?;
    let mut ratings = Vec::new();
    for (n, line) in data_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(parse_err(
                &data_path,
                n + 1,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        let rating: i64 = f[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(&data_path, n + 1, format!("bad rating `{}`", f[2])))?;
        if !(1..=5).contains(&rating) {
            return Err(Error::RatingOutOfRange {
                path: data_path.clone(),
                line: n + 1,
                value: rating,
            });
        }
        let title = *title_of
            .get(f[1].trim())
            .ok_or_else(|| parse_err(&data_path, n + 1, format!("unknown item `{}`", f[1])))?;
        ratings.push((n + 1, f[0].trim(), title, rating as i32));
    }

    // node order: users as listed, then movies in catalogue order, then types
    for u in &users {
        b.node("user", u[0]);
    }
    let rated: std::collections::HashSet<&str> = ratings.iter().map(|r| r.2).collect();
    for title in canonical.keys() {
        if rated.contains(title.as_str()) {
            b.node("movie", title);
        }
    }
    for g in &genres {
        b.node("type", g);
    }

    for (line, user, title, rating) in &ratings {
        if b.group("user").index_of(user).is_none() {
            return Err(parse_err(
                &data_path,
                *line,
                format!("unknown user `{user}`"),
            ));
        }
        b.rated_edge("R_rates", user, title, *rating)?;
    }
    for (title, movie) in &canonical {
        if !rated.contains(title.as_str()) {
            continue;
        }
        for &g in &movie.genres {
            b.edge("R_Ty", title, &genres[g])?;
        }
        b.edge("R_Ye", title, &movie.year)?;
    }
    for [id, age, gender, occupation, zip] in &users {
        b.edge("R_Ag", id, age)?;
        b.edge("R_Ge", id, gender)?;
        b.edge("R_Oc", id, occupation)?;
        b.edge("R_Lo", id, zip)?;
    }
    b.build()
}

/// Adds `R_likes`: the rating edges whose value is at least `threshold`.
pub fn derive_likes(hin: &Hin, rating_relation: &str, threshold: i32) -> Result<Hin> {
    derive_likes_named(hin, rating_relation, threshold, "R_likes")
}

pub fn derive_likes_named(
    hin: &Hin,
    rating_relation: &str,
    threshold: i32,
    name: &str,
) -> Result<Hin> {
    let rates = hin.relation(rating_relation)?;
    let values = rates
        .payload()
        .ok_or_else(|| Error::MissingPayload(rating_relation.to_string()))?;
    let edges = rates
        .edges()
        .iter()
        .zip(values)
        .filter(|&(_, &v)| v >= threshold)
        .map(|(&e, _)| e)
        .collect();
    hin.with_link_group(LinkGroup::new(name, rates.source(), rates.target(), edges))
}

/// MovieLens 100K with `R_likes` derived at the standard threshold.
pub fn load_movielens_100k(dir: &Path) -> Result<Hin> {
    derive_likes(&parse_movielens_100k(dir)?, "R_rates", LIKES_THRESHOLD)
}

/// How to read one delimiter-separated relation table.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RelationTableSpec {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    pub relation: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub source_col: usize,
    #[serde(default = "one")]
    pub target_col: usize,
    /// Column holding an integer rating, kept as edge payload.
    #[serde(default)]
    pub rating_col: Option<usize>,
    #[serde(default)]
    pub header: bool,
}

fn default_delimiter() -> String {
    ",".into()
}

fn one() -> usize {
    1
}

impl RelationTableSpec {
    fn delimiter_byte(&self) -> Result<u8> {
        let d = match self.delimiter.as_str() {
            "\\t" | "tab" => "\t",
            d => d,
        };
        match d.as_bytes() {
            [b] => Ok(*b),
            _ => Err(Error::InvalidConfig(format!(
                "delimiter of {} must be a single byte, got `{}`",
                self.path.display(),
                self.delimiter
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        self.delimiter_byte()?;
        let cols = [
            Some(self.source_col),
            Some(self.target_col),
            self.rating_col,
        ];
        let used: Vec<usize> = cols.iter().flatten().copied().collect();
        let mut dedup = used.clone();
        dedup.sort_unstable();
        dedup.dedup();
        if dedup.len() != used.len() {
            return Err(Error::InvalidConfig(format!(
                "column indices of {} must be distinct",
                self.path.display()
            )));
        }
        Ok(())
    }
}

/// Builds a network from relation tables. Tables naming the same group share
/// its nodes; nodes are ordered by first appearance across tables.
pub fn parse_relation_tables(specs: &[RelationTableSpec]) -> Result<Hin> {
    let mut b = HinBuilder::new();
    for spec in specs {
        spec.validate()?;
        b.relation(&spec.relation, &spec.source, &spec.target)?;
        if !spec.path.exists() {
            return Err(Error::MissingFile(spec.path.clone()));
        }
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(spec.delimiter_byte()?)
            .has_headers(spec.header)
            .flexible(true)
            .from_path(&spec.path)?;
        let first_line = if spec.header { 2 } else { 1 };
        for (n, record) in reader.records().enumerate() {
            let record = record?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(n + first_line);
            let field = |col: usize| {
                record.get(col).map(str::trim).ok_or_else(|| {
                    parse_err(
                        &spec.path,
                        line,
                        format!("column index {col} out of bounds ({} fields)", record.len()),
                    )
                })
            };
            let (s, t) = (field(spec.source_col)?, field(spec.target_col)?);
            match spec.rating_col {
                Some(c) => {
                    let raw = field(c)?;
                    let v: i32 = raw
                        .parse()
                        .map_err(|_| parse_err(&spec.path, line, format!("bad rating `{raw}`")))?;
                    b.rated_edge(&spec.relation, s, t, v)?;
                }
                None => b.edge(&spec.relation, s, t)?,
            }
        }
    }
    b.build()
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct LikesRule {
    pub from: String,
    #[serde(default = "default_threshold")]
    pub threshold: i32,
    #[serde(default = "default_likes_name")]
    pub name: String,
}

fn default_threshold() -> i32 {
    LIKES_THRESHOLD
}

fn default_likes_name() -> String {
    "R_likes".into()
}

/// TOML dataset manifest: `[[table]]` entries plus an optional `[likes]`
/// rule. Relative table paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct DatasetManifest {
    #[serde(default, rename = "table")]
    pub tables: Vec<RelationTableSpec>,
    #[serde(default)]
    pub likes: Option<LikesRule>,
}

impl DatasetManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map(|s| text[..s.start].lines().count().max(1))
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for t in &mut manifest.tables {
            if t.path.is_relative() {
                t.path = base.join(&t.path);
            }
        }
        Ok(manifest)
    }

    pub fn load(&self) -> Result<Hin> {
        let hin = parse_relation_tables(&self.tables)?;
        match &self.likes {
            Some(rule) => derive_likes_named(&hin, &rule.from, rule.threshold, &rule.name),
            None => Ok(hin),
        }
    }
}
