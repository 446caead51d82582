use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Decodes an IDX image file and its label file. Pixels are flattened
/// row-major per image and scaled by 1/255; the class count is the largest
/// label plus one.
pub fn parse_idx(image_bytes: &[u8], label_bytes: &[u8]) -> Result<LabeledDataset> {
    parse_idx_with_offset(image_bytes, label_bytes, 0)
}

/// Like [`parse_idx`], subtracting `label_offset` from every raw label
/// (EMNIST Letters stores 1..=26).
pub fn parse_idx_with_offset(
    image_bytes: &[u8],
    label_bytes: &[u8],
    label_offset: usize,
) -> Result<LabeledDataset> {
    let (dims, pixels) = split_header(image_bytes, IDX_IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let n = rows * cols;
    need(pixels, count * n)?;

    let (ldims, raw_labels) = split_header(label_bytes, IDX_LABELS_MAGIC, 1)?;
    need(raw_labels, ldims[0])?;
    if ldims[0] != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: ldims[0],
        });
    }

    let labels = raw_labels[..count]
        .iter()
        .map(|&b| {
            (b as usize)
                .checked_sub(label_offset)
                .ok_or(Error::InvalidLabel {
                    label: b as usize,
                    num_classes: 0,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let num_classes = labels.iter().max().map_or(0, |&l| l + 1);
    let data = pixels[..count * n]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    LabeledDataset::new(Matrix::new(count, n, data)?, labels, num_classes)
}

fn split_header(bytes: &[u8], magic: u32, ndims: usize) -> Result<(Vec<usize>, &[u8])> {
    let header = 4 * (1 + ndims);
    need(bytes, header.min(4))?;
    let found = be_u32(&bytes[0..4]);
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    need(bytes, header)?;
    let dims = (0..ndims)
        .map(|d| be_u32(&bytes[4 + 4 * d..8 + 4 * d]) as usize)
        .collect();
    Ok((dims, &bytes[header..]))
}

fn need(bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    Ok(())
}

fn be_u32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}
