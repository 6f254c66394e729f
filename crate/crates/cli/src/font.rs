//! 5x7 bitmap glyphs for panel labels.

const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;

// Rows top to bottom, bit 4 is the leftmost column.
fn glyph(c: char) -> Option<[u8; GLYPH_H]> {
    Some(match c {
        'a' => [0b00000, 0b00000, 0b01110, 0b00001, 0b01111, 0b10001, 0b01111],
        'b' => [0b10000, 0b10000, 0b11110, 0b10001, 0b10001, 0b10001, 0b11110],
        'c' => [0b00000, 0b00000, 0b01111, 0b10000, 0b10000, 0b10000, 0b01111],
        'd' => [0b00001, 0b00001, 0b01111, 0b10001, 0b10001, 0b10001, 0b01111],
        '+' => [0b00000, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0b00000],
        '-' => [0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000],
        ' ' => [0; GLYPH_H],
        _ => return None,
    })
}

/// Pixel size of `text` at the given scale, one blank column between glyphs.
pub fn text_size(text: &str, scale: usize) -> (usize, usize) {
    let n = text.chars().count();
    let w = if n == 0 { 0 } else { (n * (GLYPH_W + 1) - 1) * scale };
    (w, GLYPH_H * scale)
}

/// Calls `set(x, y)` for every lit pixel of `text`. Unknown characters
/// render as blanks.
pub fn draw_text(text: &str, scale: usize, mut set: impl FnMut(usize, usize)) {
    for (i, c) in text.chars().enumerate() {
        let Some(rows) = glyph(c) else { continue };
        let x0 = i * (GLYPH_W + 1) * scale;
        for (gy, row) in rows.iter().enumerate() {
            for gx in 0..GLYPH_W {
                if row >> (GLYPH_W - 1 - gx) & 1 == 1 {
                    for sy in 0..scale {
                        for sx in 0..scale {
                            set(x0 + gx * scale + sx, gy * scale + sy);
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minus_is_one_bar() {
        let mut lit = Vec::new();
        draw_text("-", 1, |x, y| lit.push((x, y)));
        assert_eq!(lit, (0..5).map(|x| (x, 3)).collect::<Vec<_>>());
        assert_eq!(text_size("a+b", 2), (34, 14));
    }
}
