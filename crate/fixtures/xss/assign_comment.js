const postComment = function (req, res) {
  var text = req.body;
  text = escape(text);
  store(text);
  save(text);
  var html = "<li>" + text + "</li>";
  res.send(html);
};
