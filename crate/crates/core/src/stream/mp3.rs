//! MPEG audio frame sync detection.

/// Offsets `i` where `bytes[i] == 0xFF` and the top three bits of
/// `bytes[i + 1]` are set (the 11-bit frame sync).
pub fn find_mp3_frame_syncs(bytes: &[u8]) -> Vec<usize> {
    bytes
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] == 0xFF && w[1] & 0xE0 == 0xE0)
        .map(|(i, _)| i)
        .collect()
}
