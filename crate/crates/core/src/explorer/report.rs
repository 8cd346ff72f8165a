//! Scatter export of an embedding with per-user coloring.

use std::collections::BTreeMap;

use super::EmbedError;
use crate::numfmt::f64_17;
use crate::svg::{scatter_plot, ScatterGroup};

#[derive(Clone, Debug)]
pub struct EmbeddingPoint {
    pub x: f64,
    pub y: f64,
    pub user_id: String,
    pub image_id: String,
}

#[derive(Clone, Debug)]
pub struct EmbeddingReport {
    /// Retained points, input order.
    pub points: Vec<EmbeddingPoint>,
    /// Retained users, first-appearance order.
    pub users: Vec<String>,
}

/// Keeps only users with an image count inside `[min_per_user, max_per_user]`
/// and packages CSV/SVG exports. Errors when the filter leaves nothing.
pub fn embedding_report(
    embedding: &[[f64; 2]],
    user_ids: &[String],
    image_ids: &[String],
    min_per_user: usize,
    max_per_user: usize,
) -> Result<EmbeddingReport, EmbedError> {
    if embedding.len() != user_ids.len() || embedding.len() != image_ids.len() {
        return Err(EmbedError::Mismatch(format!(
            "{} points, {} user ids, {} image ids",
            embedding.len(),
            user_ids.len(),
            image_ids.len()
        )));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for user in user_ids {
        *counts.entry(user).or_insert(0) += 1;
    }
    let keep =
        |user: &str| (min_per_user..=max_per_user).contains(counts.get(user).unwrap_or(&0));

    let mut users = Vec::new();
    let mut points = Vec::new();
    for ((xy, user), image) in embedding.iter().zip(user_ids).zip(image_ids) {
        if !keep(user) {
            continue;
        }
        if !users.contains(user) {
            users.push(user.clone());
        }
        points.push(EmbeddingPoint {
            x: xy[0],
            y: xy[1],
            user_id: user.clone(),
            image_id: image.clone(),
        });
    }
    if points.is_empty() {
        return Err(EmbedError::EmptySelection);
    }
    Ok(EmbeddingReport { points, users })
}

impl EmbeddingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,user_id,image_id\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                f64_17(p.x),
                f64_17(p.y),
                p.user_id,
                p.image_id
            ));
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let groups: Vec<ScatterGroup> = self
            .users
            .iter()
            .map(|user| ScatterGroup {
                name: user,
                points: self
                    .points
                    .iter()
                    .filter(|p| &p.user_id == user)
                    .map(|p| (p.x, p.y))
                    .collect(),
            })
            .collect();
        scatter_plot("latent embedding by user", &groups)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<[f64; 2]>, Vec<String>, Vec<String>) {
        // User a: 2 images, user b: 3 images, user c: 1 image.
        let users: Vec<String> =
            ["a", "b", "a", "b", "c", "b"].iter().map(|s| s.to_string()).collect();
        let images: Vec<String> = (0..6).map(|i| format!("img{i}")).collect();
        let embedding: Vec<[f64; 2]> =
            (0..6).map(|i| [i as f64, -(i as f64)]).collect();
        (embedding, users, images)
    }

    #[test]
    fn filter_keeps_only_users_in_range() {
        let (embedding, users, images) = fixture();
        let report = embedding_report(&embedding, &users, &images, 2, 2).unwrap();
        assert_eq!(report.users, vec!["a".to_string()]);
        assert_eq!(report.points.len(), 2);

        let report = embedding_report(&embedding, &users, &images, 2, 3).unwrap();
        assert_eq!(report.users, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(report.points.len(), 5);

        assert!(matches!(
            embedding_report(&embedding, &users, &images, 7, 9),
            Err(EmbedError::EmptySelection)
        ));
    }

    #[test]
    fn csv_row_count_matches_and_single_user_single_color() {
        let (embedding, users, images) = fixture();
        let report = embedding_report(&embedding, &users, &images, 3, 3).unwrap();
        // Only user b retained.
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,user_id,image_id");
        assert_eq!(lines.len(), 1 + 3);
        let svg = report.to_svg();
        // One legend swatch: a single retained user gets a single color.
        assert_eq!(svg.matches("<rect x=").count(), 1);
        assert_eq!(report.users.len(), 1);
    }
}
