//! FNV-1a content digests used for provenance (config digest, checkpoint
//! digest, store digest). Not cryptographic; collisions are irrelevant here,
//! the digest only ties artifacts to the exact bytes that produced them.

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn hex_digest(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

pub fn file_digest(path: impl AsRef<std::path::Path>) -> crate::Result<String> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| crate::Error::io(path.as_ref(), e))?;
    Ok(hex_digest(&bytes))
}
