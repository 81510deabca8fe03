//! Synthetic datasets in the on-disk layouts the loaders accept.
//!
//! The generators plant structure so that experiments have something to
//! find: users sharing a location (or user group) draw most of their likes
//! from a shared pool of local favourites, and movies cluster into genres.
//! They are fixtures, not stand-ins for the real datasets' statistics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::ML100K_GENRES;

const OCCUPATIONS: [&str; 21] = [
    "administrator",
    "artist",
    "doctor",
    "educator",
    "engineer",
    "entertainment",
    "executive",
    "healthcare",
    "homemaker",
    "lawyer",
    "librarian",
    "marketing",
    "none",
    "other",
    "programmer",
    "retired",
    "salesman",
    "scientist",
    "student",
    "technician",
    "writer",
];

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub users: usize,
    pub movies: usize,
    pub locations: usize,
    /// Local favourites per location.
    pub pool_size: usize,
    pub min_ratings: usize,
    pub max_ratings: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            users: 240,
            movies: 320,
            locations: 40,
            pool_size: 25,
            min_ratings: 15,
            max_ratings: 45,
            seed: 2021,
        }
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

struct Catalogue {
    genres: Vec<Vec<usize>>,
    popularity: Vec<f64>,
}

fn catalogue(rng: &mut ChaCha8Rng, movies: usize, genre_count: usize) -> Catalogue {
    let mut genres = Vec::with_capacity(movies);
    for _ in 0..movies {
        // skew towards low genre indices, never "unknown" except rarely
        let k = rng.random_range(1..=3);
        let mut gs: Vec<usize> = (0..k)
            .map(|_| {
                let x: f64 = rng.random();
                1 + ((x * x) * (genre_count - 1) as f64) as usize
            })
            .collect();
        if rng.random_bool(0.005) {
            gs = vec![0];
        }
        gs.sort_unstable();
        gs.dedup();
        genres.push(gs);
    }
    let popularity = (0..movies).map(|m| 1.0 / (1.0 + m as f64 / 20.0)).collect();
    Catalogue { genres, popularity }
}

fn weighted_pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.len() - 1
}

/// Writes `u.data`, `u.item`, `u.user` and `u.genre` into `dir`.
pub fn write_movielens_like(dir: &Path, config: &SynthConfig) -> Result<()> {
    if config.users == 0 || config.movies == 0 || config.locations == 0 {
        return Err(Error::InvalidConfig(
            "synthetic dataset needs users, movies and locations".into(),
        ));
    }
    if config.min_ratings == 0 || config.min_ratings > config.max_ratings {
        return Err(Error::InvalidConfig("bad rating count range".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cat = catalogue(&mut rng, config.movies, ML100K_GENRES.len());

    let mut item = String::new();
    for m in 0..config.movies {
        let year = 1930 + ((rng.random::<f64>().sqrt()) * 68.0) as usize;
        let mut flags = vec!["0"; ML100K_GENRES.len()];
        for &g in &cat.genres[m] {
            flags[g] = "1";
        }
        let date = if m == config.movies / 2 {
            String::new()
        } else {
            format!("01-{}-{year}", MONTHS[m % 12])
        };
        writeln!(
            item,
            "{}|Movie {} ({year})|{date}||http://example.org/{}|{}",
            m + 1,
            m + 1,
            m + 1,
            flags.join("|")
        )
        .unwrap();
    }
    write_file(dir, "u.item", &item)?;

    let mut genre = String::new();
    for (i, g) in ML100K_GENRES.iter().enumerate() {
        writeln!(genre, "{g}|{i}").unwrap();
    }
    write_file(dir, "u.genre", &genre)?;

    // each location favours a pool of movies and one or two genres
    let pools: Vec<Vec<usize>> = (0..config.locations)
        .map(|_| {
            (0..config.pool_size.min(config.movies))
                .map(|_| rng.random_range(0..config.movies))
                .collect()
        })
        .collect();
    let zips: Vec<String> = (0..config.locations)
        .map(|l| format!("{:05}", 10000 + l * 37))
        .collect();

    let mut user = String::new();
    let mut data = String::new();
    let mut ts = 874_000_000u64;
    for u in 0..config.users {
        let loc = if u < config.locations {
            u
        } else {
            rng.random_range(0..config.locations)
        };
        let age = rng.random_range(14..70);
        let gender = if rng.random_bool(0.7) { "M" } else { "F" };
        let occupation = OCCUPATIONS.choose(&mut rng).expect("non-empty");
        writeln!(user, "{}|{age}|{gender}|{occupation}|{}", u + 1, zips[loc]).unwrap();

        let count = rng
            .random_range(config.min_ratings..=config.max_ratings)
            .min(config.movies);
        let mut seen = std::collections::HashSet::new();
        let mut guard = 0;
        while seen.len() < count && guard < count * 50 {
            guard += 1;
            let (movie, local) = if rng.random_bool(0.6) {
                (*pools[loc].choose(&mut rng).expect("non-empty pool"), true)
            } else {
                (weighted_pick(&mut rng, &cat.popularity), false)
            };
            if !seen.insert(movie) {
                continue;
            }
            let rating = if local {
                rng.random_range(3..=5)
            } else {
                rng.random_range(1..=5)
            };
            ts += rng.random_range(1..500);
            writeln!(data, "{}\t{}\t{rating}\t{ts}", u + 1, movie + 1).unwrap();
        }
    }
    write_file(dir, "u.user", &user)?;
    write_file(dir, "u.data", &data)?;
    Ok(())
}

/// Writes relation tables with the Douban Movie schema (actors, directors,
/// types, user groups, locations, ratings, friendships) plus a
/// `dataset.toml` manifest deriving likes. Returns the manifest path.
pub fn write_douban_like(dir: &Path, config: &SynthConfig) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xD0B4);
    let types = 36;
    let actors = (config.movies / 2).max(4);
    let directors = (config.movies / 8).max(2);
    let groups = (config.users / 3).max(2);

    let mut ac = String::new();
    let mut di = String::new();
    let mut ty = String::new();
    for m in 0..config.movies {
        for _ in 0..rng.random_range(1..=4) {
            writeln!(ac, "m{m},a{}", rng.random_range(0..actors)).unwrap();
        }
        writeln!(di, "m{m},d{}", rng.random_range(0..directors)).unwrap();
        for _ in 0..rng.random_range(1..=3) {
            writeln!(ty, "m{m},t{}", rng.random_range(0..types)).unwrap();
        }
    }
    let mut gr = String::new();
    let mut lo = String::new();
    let mut fr = String::new();
    let mut rates = String::from("user\tmovie\trating\n");
    for u in 0..config.users {
        for _ in 0..rng.random_range(1..=3) {
            writeln!(gr, "u{u},g{}", rng.random_range(0..groups)).unwrap();
        }
        if rng.random_bool(0.8) {
            writeln!(lo, "u{u},l{}", rng.random_range(0..config.locations)).unwrap();
        }
        if rng.random_bool(0.2) {
            writeln!(fr, "u{u},u{}", rng.random_range(0..config.users)).unwrap();
        }
        let count = rng
            .random_range(config.min_ratings..=config.max_ratings)
            .min(config.movies);
        for _ in 0..count {
            writeln!(
                rates,
                "u{u}\tm{}\t{}",
                rng.random_range(0..config.movies),
                rng.random_range(1..=5)
            )
            .unwrap();
        }
    }
    write_file(dir, "movie_actor.csv", &ac)?;
    write_file(dir, "movie_director.csv", &di)?;
    write_file(dir, "movie_type.csv", &ty)?;
    write_file(dir, "user_group.csv", &gr)?;
    write_file(dir, "user_location.csv", &lo)?;
    write_file(dir, "user_user.csv", &fr)?;
    write_file(dir, "user_movie.tsv", &rates)?;

    let mut manifest = String::new();
    for (file, rel, src, tgt) in [
        ("movie_actor.csv", "R_Ac", "movie", "actor"),
        ("movie_director.csv", "R_Di", "movie", "director"),
        ("movie_type.csv", "R_Ty", "movie", "type"),
        ("user_group.csv", "R_Gr", "user", "usergroup"),
        ("user_location.csv", "R_Lo", "user", "location"),
        ("user_user.csv", "R_Fr", "user", "user"),
    ] {
        writeln!(manifest, "[[table]]\npath = \"{file}\"\nrelation = \"{rel}\"\nsource = \"{src}\"\ntarget = \"{tgt}\"\n").unwrap();
    }
    manifest.push_str(
        "[[table]]\npath = \"user_movie.tsv\"\ndelimiter = \"\\t\"\nrelation = \"R_rates\"\nsource = \"user\"\ntarget = \"movie\"\nrating_col = 2\nheader = true\n\n[likes]\nfrom = \"R_rates\"\nthreshold = 3\n",
    );
    write_file(dir, "dataset.toml", &manifest)
}
