use crate::error::{Error, Result};

pub(crate) const NIL: usize = usize::MAX;

/// A doubly linked list over node ids `0..n`, with per-node priorities.
///
/// Priorities compare as `(priority, id)`, so integer priorities with ties
/// are accepted and broken by id. Lower values are contracted first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkedList {
    pub(crate) prev: Vec<usize>,
    pub(crate) next: Vec<usize>,
    pub(crate) priority: Vec<u64>,
    pub(crate) head: usize,
}

impl LinkedList {
    /// Builds a list from `next` pointers (`None` ends the list) and a
    /// permutation of `0..n` as priorities.
    pub fn new(next: &[Option<usize>], priority: Vec<u64>) -> Result<Self> {
        let list = Self::with_integer_priorities(next, priority)?;
        let n = list.len();
        let mut seen = vec![false; n];
        for &p in &list.priority {
            if p as usize >= n || std::mem::replace(&mut seen[p as usize], true) {
                return Err(Error::InvalidPriorities(format!(
                    "expected a permutation of 0..{n}, found {p} out of range or repeated"
                )));
            }
        }
        Ok(list)
    }

    /// Like [`LinkedList::new`], but priorities may be arbitrary integers;
    /// equal priorities are ordered by node id.
    pub fn with_integer_priorities(next: &[Option<usize>], priority: Vec<u64>) -> Result<Self> {
        let n = next.len();
        if n == 0 {
            return Err(Error::MalformedList("empty list".into()));
        }
        if priority.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: priority.len(),
            });
        }
        let mut prev = vec![NIL; n];
        for (i, nx) in next.iter().enumerate() {
            if let Some(j) = *nx {
                if j >= n {
                    return Err(Error::MalformedList(format!("node {i} points to {j} >= {n}")));
                }
                if prev[j] != NIL {
                    return Err(Error::MalformedList(format!("node {j} has two predecessors")));
                }
                prev[j] = i;
            }
        }
        let heads: Vec<usize> = (0..n).filter(|&i| prev[i] == NIL).collect();
        if heads.len() != 1 {
            return Err(Error::MalformedList(format!("expected one head, found {}", heads.len())));
        }
        let head = heads[0];
        let mut count = 0;
        let mut cur = head;
        while cur != NIL {
            count += 1;
            if count > n {
                return Err(Error::MalformedList("cycle".into()));
            }
            cur = next[cur].unwrap_or(NIL);
        }
        if count != n {
            return Err(Error::MalformedList(format!(
                "only {count} of {n} nodes reachable from the head"
            )));
        }
        Ok(LinkedList {
            prev,
            next: next.iter().map(|x| x.unwrap_or(NIL)).collect(),
            priority,
            head,
        })
    }

    /// Nodes `order[0] -> order[1] -> ...` with the given priorities,
    /// indexed by node id.
    pub fn from_order(order: &[usize], priority: Vec<u64>) -> Result<Self> {
        let n = order.len();
        let mut next = vec![None; n];
        for w in order.windows(2) {
            if w[0] >= n {
                return Err(Error::MalformedList(format!("node id {} >= {n}", w[0])));
            }
            next[w[0]] = Some(w[1]);
        }
        Self::new(&next, priority)
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn next(&self, i: usize) -> Option<usize> {
        Some(self.next[i]).filter(|&x| x != NIL)
    }

    pub fn prev(&self, i: usize) -> Option<usize> {
        Some(self.prev[i]).filter(|&x| x != NIL)
    }

    pub fn priority(&self, i: usize) -> u64 {
        self.priority[i]
    }

    /// The same links with new priorities.
    pub fn reprioritized(&self, priority: Vec<u64>) -> Result<Self> {
        let next: Vec<Option<usize>> = (0..self.len()).map(|i| self.next(i)).collect();
        Self::new(&next, priority)
    }

    /// Positions by sequential pointer chasing from the head.
    pub fn sequential_ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.len()];
        let mut cur = self.head;
        let mut r = 0;
        while cur != NIL {
            rank[cur] = r;
            r += 1;
            cur = self.next[cur];
        }
        rank
    }
}

/// Total order on nodes used by the contraction: `(priority, id)`, with the
/// missing neighbour treated as +∞.
#[inline]
pub(crate) fn lower(priority: &[u64], a: usize, b: usize) -> bool {
    if a == NIL {
        return false;
    }
    if b == NIL {
        return true;
    }
    (priority[a], a) < (priority[b], b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_permutation() {
        let next = [Some(1), Some(2), None];
        assert!(matches!(LinkedList::new(&next, vec![0, 0, 1]), Err(Error::InvalidPriorities(_))));
        assert!(matches!(LinkedList::new(&next, vec![0, 1, 3]), Err(Error::InvalidPriorities(_))));
        assert!(LinkedList::with_integer_priorities(&next, vec![5, 5, 1]).is_ok());
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(LinkedList::new(&[Some(1), Some(0)], vec![0, 1]).is_err());
        assert!(LinkedList::new(&[None, None], vec![0, 1]).is_err());
        assert!(LinkedList::new(&[], vec![]).is_err());
        assert!(LinkedList::new(&[Some(5)], vec![0]).is_err());
    }

    #[test]
    fn sequential_ranks_follow_order() {
        let l = LinkedList::from_order(&[2, 0, 1], vec![0, 1, 2]).unwrap();
        assert_eq!(l.head(), 2);
        assert_eq!(l.sequential_ranks(), vec![1, 2, 0]);
    }
}
