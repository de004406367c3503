use super::PcpInstance;

/// Every index sequence `f` with `1 <= |f| <= max_len` whose top and bottom
/// concatenations agree, in lexicographic order of `f`.
///
/// Exhaustive depth-first search; a partial sequence is abandoned as soon
/// as neither concatenation is a prefix of the other.
pub fn solve_pcp_bounded(x: &PcpInstance, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut seq = Vec::new();
    search(x, max_len, &mut seq, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

fn search(
    x: &PcpInstance,
    max_len: usize,
    seq: &mut Vec<usize>,
    top: &mut Vec<usize>,
    bottom: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if !seq.is_empty() && top == bottom {
        out.push(seq.clone());
    }
    if seq.len() == max_len {
        return;
    }
    for i in 1..=x.len() {
        let (t0, b0) = (top.len(), bottom.len());
        top.extend_from_slice(x.top(i));
        bottom.extend_from_slice(x.bottom(i));
        let common = top.len().min(bottom.len());
        if top[..common] == bottom[..common] {
            seq.push(i);
            search(x, max_len, seq, top, bottom, out);
            seq.pop();
        }
        top.truncate(t0);
        bottom.truncate(b0);
    }
}
